#include "mmreg/io.hpp"

#include <array>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <vector>

namespace mmreg {

namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;  // header + 4-byte extender
constexpr std::int16_t kDatatypeFloat32 = 16;

// Explicit little-endian packing keeps the writer byte-deterministic and
// independent of host endianness.
void put_i32(unsigned char* buf, std::size_t off, std::int32_t v) {
    buf[off] = static_cast<unsigned char>(v & 0xFF);
    buf[off + 1] = static_cast<unsigned char>((v >> 8) & 0xFF);
    buf[off + 2] = static_cast<unsigned char>((v >> 16) & 0xFF);
    buf[off + 3] = static_cast<unsigned char>((v >> 24) & 0xFF);
}

void put_i16(unsigned char* buf, std::size_t off, std::int16_t v) {
    buf[off] = static_cast<unsigned char>(v & 0xFF);
    buf[off + 1] = static_cast<unsigned char>((v >> 8) & 0xFF);
}

void put_f32(unsigned char* buf, std::size_t off, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    buf[off] = static_cast<unsigned char>(bits & 0xFF);
    buf[off + 1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
    buf[off + 2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
    buf[off + 3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
}

std::int32_t get_i32(const unsigned char* buf, std::size_t off) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(buf[off]) |
                                     (static_cast<std::uint32_t>(buf[off + 1]) << 8) |
                                     (static_cast<std::uint32_t>(buf[off + 2]) << 16) |
                                     (static_cast<std::uint32_t>(buf[off + 3]) << 24));
}

std::int16_t get_i16(const unsigned char* buf, std::size_t off) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(buf[off]) |
                                     (static_cast<std::uint16_t>(buf[off + 1]) << 8));
}

float get_f32(const unsigned char* buf, std::size_t off) {
    const std::uint32_t bits = static_cast<std::uint32_t>(buf[off]) |
                               (static_cast<std::uint32_t>(buf[off + 1]) << 8) |
                               (static_cast<std::uint32_t>(buf[off + 2]) << 16) |
                               (static_cast<std::uint32_t>(buf[off + 3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

// Header offsets (NIfTI-1): sizeof_hdr 0, dim 40, datatype 70, bitpix 72,
// pixdim 76, vox_offset 108, magic 344.
struct ParsedHeader {
    std::array<std::int16_t, 8> dim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = 0.0f;
};

ParsedHeader parse_header(const std::string& path, std::ifstream& in) {
    std::array<unsigned char, kHeaderSize> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), kHeaderSize);
    if (in.gcount() != kHeaderSize)
        throw IoError("nifti '" + path + "': truncated header (" +
                      std::to_string(in.gcount()) + " of 348 bytes)");

    const std::int32_t sizeof_hdr = get_i32(buf.data(), 0);
    if (sizeof_hdr != kHeaderSize)
        throw IoError("nifti '" + path + "': sizeof_hdr is " + std::to_string(sizeof_hdr) +
                      ", expected 348 (big-endian or non-NIfTI file?)");

    const char* magic = reinterpret_cast<const char*>(buf.data() + 344);
    if (std::memcmp(magic, "n+1\0", 4) != 0) {
        if (std::memcmp(magic, "ni1\0", 4) == 0)
            throw IoError("nifti '" + path +
                          "': two-file form (magic \"ni1\") is not supported");
        throw IoError("nifti '" + path + "': wrong magic, expected \"n+1\"");
    }

    ParsedHeader h;
    for (int i = 0; i < 8; ++i) h.dim[i] = get_i16(buf.data(), 40 + 2 * i);
    h.datatype = get_i16(buf.data(), 70);
    h.bitpix = get_i16(buf.data(), 72);
    for (int i = 0; i < 8; ++i) h.pixdim[i] = get_f32(buf.data(), 76 + 4 * i);
    h.vox_offset = get_f32(buf.data(), 108);

    if (h.datatype != kDatatypeFloat32)
        throw IoError("nifti '" + path + "': unsupported datatype code " +
                      std::to_string(h.datatype) + ", only float32 (16) is supported");
    if (h.bitpix != 32)
        throw IoError("nifti '" + path + "': bitpix " + std::to_string(h.bitpix) +
                      " does not match float32");
    if (h.dim[0] != 3 && h.dim[0] != 4)
        throw IoError("nifti '" + path + "': dim[0] must be 3 or 4, got " +
                      std::to_string(h.dim[0]));
    for (int i = 1; i <= 3; ++i)
        if (h.dim[i] < 1)
            throw IoError("nifti '" + path + "': dim[" + std::to_string(i) +
                          "] must be >= 1, got " + std::to_string(h.dim[i]));
    if (h.dim[0] == 4 && h.dim[4] < 1)
        throw IoError("nifti '" + path + "': dim[4] must be >= 1 when dim[0] is 4, got " +
                      std::to_string(h.dim[4]));
    for (int i = 1; i <= 3; ++i)
        if (!(h.pixdim[i] > 0.0f) || !std::isfinite(h.pixdim[i]))
            throw IoError("nifti '" + path + "': pixdim[" + std::to_string(i) +
                          "] must be finite and > 0");
    if (!std::isfinite(h.vox_offset) || h.vox_offset < kHeaderSize)
        throw IoError("nifti '" + path + "': vox_offset must be >= 348");
    return h;
}

Volume read_volume_impl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("nifti '" + path + "': cannot open for reading");
    const ParsedHeader h = parse_header(path, in);

    Volume v;
    v.dims = Dims{h.dim[1], h.dim[2], h.dim[3]};
    v.channels = (h.dim[0] == 4) ? h.dim[4] : 1;
    v.spacing = {h.pixdim[1], h.pixdim[2], h.pixdim[3]};

    const std::size_t count = v.expected_size();
    if (count > (std::size_t{1} << 31))
        throw IoError("nifti '" + path + "': implausibly large dims");

    in.seekg(static_cast<std::streamoff>(h.vox_offset), std::ios::beg);
    std::vector<unsigned char> raw(count * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw IoError("nifti '" + path + "': truncated data, expected " +
                      std::to_string(raw.size()) + " bytes after vox_offset");

    v.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const float f = get_f32(raw.data(), i * 4);
        if (!std::isfinite(f))
            throw IoError("nifti '" + path + "': non-finite value at linear index " +
                          std::to_string(i));
        v.data[i] = static_cast<double>(f);
    }
    return v;
}

void write_nifti(const std::string& path, const Dims& dims, int fourth_dim,
                 const std::array<double, 3>& spacing, const std::vector<double>& data) {
    std::array<unsigned char, kVoxOffset> header{};
    put_i32(header.data(), 0, kHeaderSize);
    const bool four_d = fourth_dim > 1;
    put_i16(header.data(), 40, four_d ? 4 : 3);
    put_i16(header.data(), 42, static_cast<std::int16_t>(dims.nx));
    put_i16(header.data(), 44, static_cast<std::int16_t>(dims.ny));
    put_i16(header.data(), 46, static_cast<std::int16_t>(dims.nz));
    if (four_d) put_i16(header.data(), 48, static_cast<std::int16_t>(fourth_dim));
    put_i16(header.data(), 70, kDatatypeFloat32);
    put_i16(header.data(), 72, 32);
    put_f32(header.data(), 80, static_cast<float>(spacing[0]));
    put_f32(header.data(), 84, static_cast<float>(spacing[1]));
    put_f32(header.data(), 88, static_cast<float>(spacing[2]));
    put_f32(header.data(), 108, static_cast<float>(kVoxOffset));
    std::memcpy(header.data() + 344, "n+1\0", 4);
    // bytes 348..351 stay zero: empty extension indicator

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("nifti '" + path + "': cannot open for writing");
    out.write(reinterpret_cast<const char*>(header.data()), header.size());

    std::vector<unsigned char> raw(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i)
        put_f32(raw.data(), i * 4, static_cast<float>(data[i]));
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("nifti '" + path + "': write failed");
}

std::string format_coordinate(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_coordinate(const std::string& token, const std::string& path, int line_no) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw IoError("landmarks '" + path + "' line " + std::to_string(line_no) +
                      ": unparsable number '" + token + "'");
    if (!std::isfinite(value))
        throw IoError("landmarks '" + path + "' line " + std::to_string(line_no) +
                      ": non-finite coordinate");
    return value;
}

}  // namespace

Volume read_volume(const std::string& path) { return read_volume_impl(path); }

void write_volume(const std::string& path, const Volume& v) {
    v.validate();
    if (v.dims.nx > 32767 || v.dims.ny > 32767 || v.dims.nz > 32767 || v.channels > 32767)
        throw IoError("nifti '" + path + "': dims exceed the int16 header range");
    write_nifti(path, v.dims, v.channels, v.spacing, v.data);
}

DisplacementField read_field(const std::string& path) {
    const Volume v = read_volume_impl(path);
    if (v.channels != 3)
        throw ShapeError("field '" + path + "': expected dim[4] == 3 vector components, got " +
                         std::to_string(v.channels));
    DisplacementField u;
    u.dims = v.dims;
    u.data = v.data;
    return u;
}

void write_field(const std::string& path, const DisplacementField& u) {
    u.validate();
    if (u.dims.nx > 32767 || u.dims.ny > 32767 || u.dims.nz > 32767)
        throw IoError("nifti '" + path + "': dims exceed the int16 header range");
    write_nifti(path, u.dims, 3, {1.0, 1.0, 1.0}, u.data);
}

LandmarkSet read_landmarks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("landmarks '" + path + "': cannot open for reading");

    std::string line;
    if (!std::getline(in, line))
        throw IoError("landmarks '" + path + "': empty file, missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,fx,fy,fz,mx,my,mz")
        throw IoError("landmarks '" + path + "' line 1: header must be exactly "
                      "'id,fx,fy,fz,mx,my,mz'");

    LandmarkSet set;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> tokens;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            tokens.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (tokens.size() != 7)
            throw IoError("landmarks '" + path + "' line " + std::to_string(line_no) +
                          ": expected 7 columns, got " + std::to_string(tokens.size()));
        Landmark lm;
        lm.id = tokens[0];
        if (lm.id.empty())
            throw IoError("landmarks '" + path + "' line " + std::to_string(line_no) +
                          ": empty id");
        for (int k = 0; k < 3; ++k) lm.fixed[k] = parse_coordinate(tokens[1 + k], path, line_no);
        for (int k = 0; k < 3; ++k)
            lm.moving[k] = parse_coordinate(tokens[4 + k], path, line_no);
        set.entries.push_back(std::move(lm));
    }
    set.validate();
    return set;
}

void write_landmarks(const std::string& path, const LandmarkSet& landmarks) {
    landmarks.validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("landmarks '" + path + "': cannot open for writing");
    out << "id,fx,fy,fz,mx,my,mz\n";
    for (const auto& lm : landmarks.entries) {
        out << lm.id;
        for (int k = 0; k < 3; ++k) out << ',' << format_coordinate(lm.fixed[k]);
        for (int k = 0; k < 3; ++k) out << ',' << format_coordinate(lm.moving[k]);
        out << '\n';
    }
    if (!out) throw IoError("landmarks '" + path + "': write failed");
}

ResolvedConfig default_config() {
    ResolvedConfig cfg;
    cfg.loss = LossSpec::equal_weights({Metric::MSE, Metric::NCC}, 1.0);
    cfg.optim = OptimConfig{};
    return cfg;
}

ResolvedConfig config_from_json(const nlohmann::json& doc, const std::string& context) {
    if (!doc.is_object())
        throw ValidationError("config " + context + ": document must be a JSON object");

    static const std::set<std::string> known{"metrics",    "lambda", "learning_rate",
                                             "iterations", "levels", "ncc_window",
                                             "ncc_epsilon"};
    for (const auto& [key, value] : doc.items())
        if (!known.count(key))
            throw ValidationError("config " + context + ": unknown key '" + key + "'");

    ResolvedConfig cfg = default_config();
    try {
        if (doc.contains("metrics")) {
            const auto& arr = doc.at("metrics");
            if (!arr.is_array() || arr.empty())
                throw ValidationError("config " + context +
                                      ": 'metrics' must be a non-empty array");
            cfg.loss.metrics.clear();
            for (const auto& entry : arr) {
                if (!entry.is_object() || !entry.contains("name") || !entry.contains("weight"))
                    throw ValidationError("config " + context +
                                          ": each metric needs 'name' and 'weight'");
                MetricTerm term;
                term.kind = metric_from_name(entry.at("name").get<std::string>());
                term.weight = entry.at("weight").get<double>();
                if (term.weight < 0.0)
                    throw ValidationError("config " + context + ": metric '" +
                                          entry.at("name").get<std::string>() +
                                          "' has negative weight");
                cfg.loss.metrics.push_back(term);
            }
        }
        if (doc.contains("lambda")) cfg.loss.lambda = doc.at("lambda").get<double>();
        if (doc.contains("ncc_window")) cfg.loss.ncc_window = doc.at("ncc_window").get<int>();
        if (doc.contains("ncc_epsilon"))
            cfg.loss.ncc_epsilon = doc.at("ncc_epsilon").get<double>();
        if (doc.contains("learning_rate"))
            cfg.optim.learning_rate = doc.at("learning_rate").get<double>();
        if (doc.contains("iterations")) cfg.optim.iterations = doc.at("iterations").get<int>();
        if (doc.contains("levels")) cfg.optim.levels = doc.at("levels").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + context + ": " + e.what());
    }
    cfg.loss.validate();
    cfg.optim.validate();
    return cfg;
}

ResolvedConfig read_config(const std::string& path) {
    return config_from_json(read_json(path), "'" + path + "'");
}

nlohmann::json config_to_json(const ResolvedConfig& cfg) {
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& term : cfg.loss.metrics)
        metrics.push_back({{"name", metric_name(term.kind)}, {"weight", term.weight}});
    return {{"metrics", metrics},
            {"lambda", cfg.loss.lambda},
            {"ncc_window", cfg.loss.ncc_window},
            {"ncc_epsilon", cfg.loss.ncc_epsilon},
            {"learning_rate", cfg.optim.learning_rate},
            {"iterations", cfg.optim.iterations},
            {"levels", cfg.optim.levels}};
}

nlohmann::json tre_report_to_json(const TreReport& report) {
    nlohmann::json distances = nlohmann::json::array();
    for (const auto& [id, d] : report.distances)
        distances.push_back({{"id", id}, {"mm", d}});
    return {{"distances", distances},
            {"mean_mm", report.mean},
            {"std_mm", report.stddev},
            {"count", report.count()}};
}

nlohmann::json hit_rate_to_json(const HitRateCurve& curve) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& [tau, fraction] : curve.samples)
        samples.push_back({{"tau_mm", tau}, {"fraction", fraction}});
    return samples;
}

nlohmann::json t_test_to_json(const PairedTTest& test) {
    nlohmann::json j{{"dof", test.dof}, {"p", test.p}};
    if (std::isfinite(test.t))
        j["t"] = test.t;
    else
        j["t"] = test.t > 0 ? "+inf" : "-inf";
    return j;
}

nlohmann::json comparison_to_json(const ComparisonTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json j{{"name", row.name},
                         {"mean_mm", row.mean},
                         {"std_mm", row.stddev},
                         {"n", row.n}};
        if (row.has_test) j["t_test_vs_baseline"] = t_test_to_json(row.test);
        rows.push_back(std::move(j));
    }
    return {{"baseline", table.baseline}, {"rows", rows}};
}

void write_report(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("report '" + path + "': cannot open for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("report '" + path + "': write failed");
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("json '" + path + "': cannot open for reading");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("json '" + path + "': malformed document: " + e.what());
    }
}

}  // namespace mmreg
