// mmreg: landmark evaluation — TRE in millimeters, hit-rate curves, paired
// t-tests, and comparison tables.
#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mmreg/types.hpp"

namespace mmreg {

struct TreReport {
    // (id, distance in mm) in landmark order.
    std::vector<std::pair<std::string, double>> distances;
    double mean = 0.0;
    double stddev = 0.0;  // n-1 divisor; 0 when n == 1
    int count() const { return static_cast<int>(distances.size()); }
};

struct HitRateCurve {
    // (tolerance tau in mm, fraction of landmarks with distance <= tau).
    std::vector<std::pair<double, double>> samples;
};

struct PairedTTest {
    double t = 0.0;  // +/-infinity sentinel when sd(d) == 0 and mean(d) != 0
    int dof = 0;
    double p = 1.0;  // two-sided
};

struct ComparisonRow {
    std::string name;
    double mean = 0.0;
    double stddev = 0.0;
    int n = 0;
    bool has_test = false;  // false for the baseline row
    PairedTTest test;       // row vs baseline
};

struct ComparisonTable {
    std::string baseline;
    std::vector<ComparisonRow> rows;
};

// Landmarks annotated in the fixed image are mapped with the forward field
// into moving space; distances are per-axis spacing-scaled Euclidean norms.
TreReport tre(const LandmarkSet& landmarks, const DisplacementField& u_fwd,
              std::array<double, 3> spacing);

// fraction(tau) = |{i : distance_i <= tau}| / n on the caller's tau grid
// (non-negative, ascending).
HitRateCurve hit_rate(const TreReport& report, const std::vector<double>& taus);

// Two-sided paired t-test on d_i = a_i - b_i matched by landmark id.
// Degenerate sd(d) = 0 gives p = 1 (mean 0) or p = 0 with t = +/-inf.
PairedTTest paired_t_test(const TreReport& a, const TreReport& b);

// Summary rows plus pairwise t-tests against the first (baseline) report.
ComparisonTable compare(const std::vector<std::pair<std::string, TreReport>>& reports);

// I_x(a, b) via Lentz continued fraction, 1e-12 convergence.
double regularized_incomplete_beta(double x, double a, double b);

// Two-sided Student-t p-value for |t| with the given degrees of freedom.
double student_t_two_sided_p(double t, int dof);

}  // namespace mmreg
