#include "mmreg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mmreg/sampling.hpp"

namespace mmreg {

namespace {

// Continued fraction for I_x(a,b), modified Lentz.
double incomplete_beta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double tol = 1e-12;
    constexpr int max_iters = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iters; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < tol) break;
    }
    return h;
}

void mean_and_sd(const std::vector<double>& v, double& mean, double& sd) {
    const std::size_t n = v.size();
    double acc = 0.0;
    for (double x : v) acc += x;
    mean = acc / static_cast<double>(n);
    if (n < 2) {
        sd = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ValidationError("regularized_incomplete_beta: a and b must be > 0");
    if (!(x >= 0.0) || !(x <= 1.0))
        throw ValidationError("regularized_incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * incomplete_beta_cf(x, a, b) / a;
    return 1.0 - front * incomplete_beta_cf(1.0 - x, b, a) / b;
}

double student_t_two_sided_p(double t, int dof) {
    if (dof < 1) throw ValidationError("student_t_two_sided_p: dof must be >= 1");
    if (std::isinf(t)) return 0.0;
    const double v = static_cast<double>(dof);
    return regularized_incomplete_beta(v / (t * t + v), v / 2.0, 0.5);
}

TreReport tre(const LandmarkSet& landmarks, const DisplacementField& u_fwd,
              std::array<double, 3> spacing) {
    if (landmarks.entries.empty()) throw ValidationError("tre: empty landmark set");
    landmarks.validate_against(u_fwd.dims);
    for (double s : spacing)
        if (!(s > 0.0) || !std::isfinite(s))
            throw ValidationError("tre: spacing components must be finite and > 0");

    TreReport report;
    std::vector<double> dists;
    dists.reserve(landmarks.entries.size());
    for (const auto& lm : landmarks.entries) {
        const SamplePoint warped =
            warp_point(u_fwd, SamplePoint{lm.fixed[0], lm.fixed[1], lm.fixed[2]});
        const double dx = (warped.x - lm.moving[0]) * spacing[0];
        const double dy = (warped.y - lm.moving[1]) * spacing[1];
        const double dz = (warped.z - lm.moving[2]) * spacing[2];
        const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
        report.distances.emplace_back(lm.id, dist);
        dists.push_back(dist);
    }
    mean_and_sd(dists, report.mean, report.stddev);
    return report;
}

HitRateCurve hit_rate(const TreReport& report, const std::vector<double>& taus) {
    if (report.distances.empty()) throw ValidationError("hit_rate: empty report");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] >= 0.0) || !std::isfinite(taus[i]))
            throw ValidationError("hit_rate: tolerances must be finite and >= 0");
        if (i > 0 && taus[i] < taus[i - 1])
            throw ValidationError("hit_rate: tolerances must be sorted ascending");
    }
    HitRateCurve curve;
    const double n = static_cast<double>(report.distances.size());
    for (double tau : taus) {
        int hits = 0;
        for (const auto& [id, d] : report.distances)
            if (d <= tau) ++hits;
        curve.samples.emplace_back(tau, static_cast<double>(hits) / n);
    }
    return curve;
}

PairedTTest paired_t_test(const TreReport& a, const TreReport& b) {
    if (a.distances.size() != b.distances.size())
        throw ValidationError("paired_t_test: reports have different landmark counts");
    const std::size_t n = a.distances.size();
    if (n < 2) throw ValidationError("paired_t_test: need at least 2 paired landmarks");

    std::map<std::string, double> b_by_id;
    for (const auto& [id, d] : b.distances) b_by_id[id] = d;

    std::vector<double> diffs;
    diffs.reserve(n);
    for (const auto& [id, d] : a.distances) {
        auto it = b_by_id.find(id);
        if (it == b_by_id.end())
            throw ValidationError("paired_t_test: landmark id '" + id +
                                  "' missing from the second report");
        diffs.push_back(d - it->second);
    }

    double mean = 0.0, sd = 0.0;
    mean_and_sd(diffs, mean, sd);

    PairedTTest result;
    result.dof = static_cast<int>(n) - 1;
    if (sd == 0.0) {
        if (mean == 0.0) {
            result.t = 0.0;
            result.p = 1.0;
        } else {
            result.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
            result.p = 0.0;
        }
        return result;
    }
    result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    result.p = student_t_two_sided_p(result.t, result.dof);
    return result;
}

ComparisonTable compare(const std::vector<std::pair<std::string, TreReport>>& reports) {
    if (reports.empty()) throw ValidationError("compare: need at least one report");
    ComparisonTable table;
    table.baseline = reports.front().first;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& [name, report] = reports[i];
        ComparisonRow row;
        row.name = name;
        row.mean = report.mean;
        row.stddev = report.stddev;
        row.n = report.count();
        if (i > 0) {
            row.has_test = true;
            row.test = paired_t_test(report, reports.front().second);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace mmreg
