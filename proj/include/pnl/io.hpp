#pragma once

// Plain-text file formats.
//
// Field samples and checkpoints share one layout: `key value...` header
// lines, a `count N` line, then N whitespace-separated data rows. Lines
// starting with '#' are comments. Doubles are written with 17 significant
// digits so every value reads back bit-exactly.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pnl/errors.hpp"
#include "pnl/field.hpp"
#include "pnl/harmonics.hpp"
#include "pnl/point_neuron.hpp"

namespace pnl::io {

namespace fs = std::filesystem;

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Short deterministic formatting for CSV cells and file names.
inline std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string snr_label(double snr_db) { return std::isinf(snr_db) && snr_db > 0 ? "none" : fmt_short(snr_db); }

inline double parse_double(const std::string& s, const std::string& what) {
    if (s == "inf" || s == "none") return std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("cannot parse '" + s + "' as a number (" + what + ")");
    }
}

/// Writes via a temporary sibling file and a rename, so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TextTable {
    std::map<std::string, std::vector<std::string>> header;
    std::vector<std::vector<std::string>> rows;

    const std::vector<std::string>& field(const std::string& key) const {
        auto it = header.find(key);
        if (it == header.end() || it->second.empty()) throw IoError("missing header field '" + key + "'");
        return it->second;
    }
    std::string str(const std::string& key) const { return field(key).front(); }
    double num(const std::string& key) const { return parse_double(str(key), key); }
    bool has(const std::string& key) const { return header.count(key) != 0; }
};

inline std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

inline TextTable parse_table(const std::string& text, const std::string& origin) {
    TextTable t;
    std::istringstream in(text);
    std::string line;
    long expected = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (expected < 0) {
            const std::string key = toks.front();
            toks.erase(toks.begin());
            if (key == "count") {
                if (toks.size() != 1) throw IoError(origin + ": malformed count line");
                expected = static_cast<long>(parse_double(toks[0], "count"));
                if (expected < 0) throw IoError(origin + ": negative count");
                continue;
            }
            t.header[key] = std::move(toks);
        } else {
            t.rows.push_back(std::move(toks));
        }
    }
    if (expected < 0) throw IoError(origin + ": missing count line");
    if (static_cast<long>(t.rows.size()) != expected)
        throw IoError(origin + ": expected " + std::to_string(expected) + " rows, found " + std::to_string(t.rows.size()));
    return t;
}

// ---------------------------------------------------------------------------
// Field samples

struct FieldFile {
    std::string kind;  // observations | observations_clean | truth
    FieldSamples samples;
    std::map<std::string, std::string> meta;
    /// Only present for evaluation grids: whether each point lies in the target region.
    std::vector<bool> in_region;
};

inline std::string format_field(const FieldFile& f) {
    std::ostringstream os;
    os << "# pnl field samples: x y z re im" << (f.in_region.empty() ? "" : " in_region") << "\n";
    os << "kind " << f.kind << "\n";
    os << "frequency_hz " << fmt17(f.samples.frequency_hz) << "\n";
    os << "k " << fmt17(f.samples.k.value()) << "\n";
    for (const auto& [key, value] : f.meta) os << key << ' ' << value << "\n";
    os << "count " << f.samples.size() << "\n";
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        const auto& p = f.samples.points[i];
        const auto& v = f.samples.values[i];
        os << fmt17(p.x) << ' ' << fmt17(p.y) << ' ' << fmt17(p.z) << ' ' << fmt17(v.real()) << ' ' << fmt17(v.imag());
        if (!f.in_region.empty()) os << ' ' << (f.in_region[i] ? 1 : 0);
        os << "\n";
    }
    return os.str();
}

inline void write_field(const fs::path& path, const FieldFile& f) { write_atomic(path, format_field(f)); }

inline FieldFile read_field(const fs::path& path) {
    const TextTable t = parse_table(read_file(path), path.string());
    FieldFile f;
    f.kind = t.str("kind");
    f.samples.frequency_hz = t.num("frequency_hz");
    f.samples.k = Wavenumber(t.num("k"));
    for (const auto& [key, vals] : t.header)
        if (key != "kind" && key != "frequency_hz" && key != "k" && !vals.empty()) f.meta[key] = vals.front();
    for (const auto& row : t.rows) {
        if (row.size() != 5 && row.size() != 6) throw IoError(path.string() + ": field rows need 5 or 6 columns");
        f.samples.points.push_back({parse_double(row[0], "x"), parse_double(row[1], "y"), parse_double(row[2], "z")});
        f.samples.values.emplace_back(parse_double(row[3], "re"), parse_double(row[4], "im"));
        if (row.size() == 6) f.in_region.push_back(row[5] == "1");
    }
    if (!f.in_region.empty() && f.in_region.size() != f.samples.size())
        throw IoError(path.string() + ": in_region column present on only some rows");
    return f;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline std::string format_checkpoint(const PointNeuronModel& m, double frequency_hz) {
    std::ostringstream os;
    os << "# pnl checkpoint: re_w im_w bx by bz\n";
    os << "kind point_neuron\n";
    os << "frequency_hz " << fmt17(frequency_hz) << "\n";
    os << "k " << fmt17(m.k.value()) << "\n";
    os << "neurons " << m.size() << "\n";
    os << "reference " << fmt17(m.reference.x) << ' ' << fmt17(m.reference.y) << ' ' << fmt17(m.reference.z) << "\n";
    os << "count " << m.size() << "\n";
    for (std::size_t v = 0; v < m.size(); ++v) {
        os << fmt17(m.weights[v].real()) << ' ' << fmt17(m.weights[v].imag()) << ' ' << fmt17(m.biases[v].x) << ' '
           << fmt17(m.biases[v].y) << ' ' << fmt17(m.biases[v].z) << "\n";
    }
    return os.str();
}

inline std::string format_checkpoint(const HarmonicModel& m, double frequency_hz) {
    std::ostringstream os;
    os << "# pnl checkpoint: n re_alpha im_alpha\n";
    os << "kind harmonics\n";
    os << "frequency_hz " << fmt17(frequency_hz) << "\n";
    os << "k " << fmt17(m.k.value()) << "\n";
    os << "center " << fmt17(m.center.x) << ' ' << fmt17(m.center.y) << ' ' << fmt17(m.center.z) << "\n";
    os << "order " << m.order << "\n";
    os << "count " << m.coefficients.size() << "\n";
    for (int n = -m.order; n <= m.order; ++n) {
        const Complex a = m.coefficient(n);
        os << n << ' ' << fmt17(a.real()) << ' ' << fmt17(a.imag()) << "\n";
    }
    return os.str();
}

inline Point3 parse_point(const std::vector<std::string>& v, const std::string& what) {
    if (v.size() != 3) throw IoError(what + " needs three coordinates");
    return {parse_double(v[0], what), parse_double(v[1], what), parse_double(v[2], what)};
}

inline std::string checkpoint_kind(const fs::path& path) {
    return parse_table(read_file(path), path.string()).str("kind");
}

inline PointNeuronModel read_point_neuron_checkpoint(const fs::path& path, double* frequency_hz = nullptr) {
    const TextTable t = parse_table(read_file(path), path.string());
    if (t.str("kind") != "point_neuron") throw IoError(path.string() + ": not a point neuron checkpoint");
    PointNeuronModel m;
    m.k = Wavenumber(t.num("k"));
    m.reference = t.has("reference") ? parse_point(t.field("reference"), "reference") : Point3{};
    if (frequency_hz) *frequency_hz = t.num("frequency_hz");
    for (const auto& row : t.rows) {
        if (row.size() != 5) throw IoError(path.string() + ": checkpoint rows need 5 columns");
        m.weights.emplace_back(parse_double(row[0], "re_w"), parse_double(row[1], "im_w"));
        m.biases.push_back({parse_double(row[2], "bx"), parse_double(row[3], "by"), parse_double(row[4], "bz")});
    }
    m.validate();
    return m;
}

inline HarmonicModel read_harmonic_checkpoint(const fs::path& path, double* frequency_hz = nullptr) {
    const TextTable t = parse_table(read_file(path), path.string());
    if (t.str("kind") != "harmonics") throw IoError(path.string() + ": not a harmonics checkpoint");
    HarmonicModel m;
    m.k = Wavenumber(t.num("k"));
    m.center = parse_point(t.field("center"), "center");
    m.order = static_cast<int>(t.num("order"));
    if (frequency_hz) *frequency_hz = t.num("frequency_hz");
    if (t.rows.size() != static_cast<std::size_t>(2 * m.order + 1))
        throw IoError(path.string() + ": expected 2N+1 coefficients");
    for (const auto& row : t.rows) {
        if (row.size() != 3) throw IoError(path.string() + ": harmonic rows need 3 columns");
        m.coefficients.emplace_back(parse_double(row[1], "re"), parse_double(row[2], "im"));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Loss history

inline std::string format_loss_history(const LossHistory& h) {
    std::ostringstream os;
    os << "iteration,total,data,l1,best_total\n";
    for (const auto& r : h.records)
        os << r.iteration << ',' << fmt17(r.total) << ',' << fmt17(r.data) << ',' << fmt17(r.l1) << ','
           << fmt17(r.best_total) << "\n";
    return os.str();
}

inline std::string format_relocations(const LossHistory& h) {
    std::ostringstream os;
    os << "iteration,neuron,from_x,from_y,from_z,to_x,to_y,to_z\n";
    for (const auto& e : h.relocations)
        os << e.iteration << ',' << e.neuron << ',' << fmt17(e.from.x) << ',' << fmt17(e.from.y) << ','
           << fmt17(e.from.z) << ',' << fmt17(e.to.x) << ',' << fmt17(e.to.y) << ',' << fmt17(e.to.z) << "\n";
    return os.str();
}

}  // namespace pnl::io
