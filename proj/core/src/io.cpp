#include "qstat/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qstat::io {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    try {
        size_t pos = 0;
        const double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(where + ": cannot parse number '" + t + "'");
    }
}

double parse_count(const std::string& s, const std::string& where) {
    const double v = parse_double(s, where);
    if (!(v >= 0) || v != std::floor(v))
        throw SchemaError(where + ": counts must be non-negative integers, got '" + trim(s) +
                          "'");
    return v;
}

std::string format_count(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

const std::vector<std::string>& model_param_keys() {
    static const std::vector<std::string> keys = {
        "intensity_factor",
        "thermal_scale_signal", "thermal_exponent_signal",
        "thermal_scale_herald", "thermal_exponent_herald",
        "squeezing_scale_signal", "squeezing_exponent_signal",
        "squeezing_scale_herald", "squeezing_exponent_herald",
        "squeezing_phase_signal", "squeezing_phase_herald",
        "displacement_scale_signal", "displacement_exponent_signal",
        "displacement_scale_herald", "displacement_exponent_herald",
        "bs1_theta", "bs1_phi", "bs2_theta", "bs2_phi",
    };
    return keys;
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// --- click record CSV -----------------------------------------------------

static const char* kRecordHeader = "intensity,R0,R1A,R1B,R2,RSA,RSB,RC,NP";

std::vector<RecordRow> read_click_records(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line))
        throw SchemaError(path + ": empty file, expected header '" + kRecordHeader + "'");
    if (trim(line) != kRecordHeader)
        throw SchemaError(path + ":1: bad header, expected '" + kRecordHeader + "'");
    std::vector<RecordRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        const std::string where = path + ":" + std::to_string(line_no);
        if (fields.size() != 9)
            throw SchemaError(where + ": expected 9 fields, got " +
                              std::to_string(fields.size()));
        RecordRow row;
        row.intensity = parse_double(fields[0], where);
        row.record.r0 = parse_count(fields[1], where);
        row.record.r1a = parse_count(fields[2], where);
        row.record.r1b = parse_count(fields[3], where);
        row.record.r2 = parse_count(fields[4], where);
        row.record.rs_a = parse_count(fields[5], where);
        row.record.rs_b = parse_count(fields[6], where);
        row.record.rc = parse_count(fields[7], where);
        row.record.n_pulses = static_cast<std::int64_t>(parse_count(fields[8], where));
        try {
            row.record.validate();
        } catch (const Error& e) {
            throw SchemaError(where + ": " + e.what());
        }
        rows.push_back(row);
    }
    return rows;
}

void write_click_records(const std::string& path, const std::vector<RecordRow>& rows) {
    std::ofstream out = open_for_write(path);
    out << kRecordHeader << "\n";
    for (const RecordRow& row : rows) {
        const auto& r = row.record;
        out << format_double(row.intensity) << ',' << format_count(r.r0) << ','
            << format_count(r.r1a) << ',' << format_count(r.r1b) << ',' << format_count(r.r2)
            << ',' << format_count(r.rs_a) << ',' << format_count(r.rs_b) << ','
            << format_count(r.rc) << ',' << r.n_pulses << "\n";
    }
}

// --- model parameter file ----------------------------------------------------

model::ModelParams read_model_params(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::map<std::string, double> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const size_t eq = stripped.find('=');
        const std::string where = path + ":" + std::to_string(line_no);
        if (eq == std::string::npos) throw SchemaError(where + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        kv[key] = parse_double(stripped.substr(eq + 1), where);
    }
    for (const auto& [key, value] : kv) {
        (void)value;
        if (key == "normalize_by_i0") continue;
        const auto& keys = model_param_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw SchemaError(path + ": unknown parameter key '" + key + "'");
    }
    auto need = [&kv, &path](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw SchemaError(path + ": missing parameter '" + key + "'");
        return it->second;
    };
    model::ModelParams p;
    p.intensity_factor = need("intensity_factor");
    p.thermal[0] = {need("thermal_scale_signal"), need("thermal_exponent_signal")};
    p.thermal[1] = {need("thermal_scale_herald"), need("thermal_exponent_herald")};
    p.squeezing[0] = {need("squeezing_scale_signal"), need("squeezing_exponent_signal")};
    p.squeezing[1] = {need("squeezing_scale_herald"), need("squeezing_exponent_herald")};
    p.squeezing_phase = {need("squeezing_phase_signal"), need("squeezing_phase_herald")};
    p.displacement[0] = {need("displacement_scale_signal"), need("displacement_exponent_signal")};
    p.displacement[1] = {need("displacement_scale_herald"), need("displacement_exponent_herald")};
    p.bs1_theta = need("bs1_theta");
    p.bs1_phi = need("bs1_phi");
    p.bs2_theta = need("bs2_theta");
    p.bs2_phi = need("bs2_phi");
    if (auto it = kv.find("normalize_by_i0"); it != kv.end())
        p.normalize_by_i0 = it->second != 0.0;
    p.validate();
    return p;
}

void write_model_params(const std::string& path, const model::ModelParams& p) {
    std::ofstream out = open_for_write(path);
    const std::vector<std::pair<std::string, double>> rows = {
        {"intensity_factor", p.intensity_factor},
        {"thermal_scale_signal", p.thermal[0].scale},
        {"thermal_exponent_signal", p.thermal[0].exponent},
        {"thermal_scale_herald", p.thermal[1].scale},
        {"thermal_exponent_herald", p.thermal[1].exponent},
        {"squeezing_scale_signal", p.squeezing[0].scale},
        {"squeezing_exponent_signal", p.squeezing[0].exponent},
        {"squeezing_scale_herald", p.squeezing[1].scale},
        {"squeezing_exponent_herald", p.squeezing[1].exponent},
        {"squeezing_phase_signal", p.squeezing_phase[0]},
        {"squeezing_phase_herald", p.squeezing_phase[1]},
        {"displacement_scale_signal", p.displacement[0].scale},
        {"displacement_exponent_signal", p.displacement[0].exponent},
        {"displacement_scale_herald", p.displacement[1].scale},
        {"displacement_exponent_herald", p.displacement[1].exponent},
        {"bs1_theta", p.bs1_theta},
        {"bs1_phi", p.bs1_phi},
        {"bs2_theta", p.bs2_theta},
        {"bs2_phi", p.bs2_phi},
        {"normalize_by_i0", p.normalize_by_i0 ? 1.0 : 0.0},
    };
    for (const auto& [key, value] : rows) out << key << " = " << format_double(value) << "\n";
}

// --- observable curve CSV ------------------------------------------------------

fit::ObservableCurve read_curve(const std::string& path, fit::ObservableKind kind) {
    std::ifstream in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty curve file");
    const std::string header = trim(line);
    int x_col = 0, y_col = 1, sigma_col = -1, n_fields = 2;
    if (header == "x,value,sigma") {
        sigma_col = 2;
        n_fields = 3;
    } else if (header == "x,value") {
        // defaults
    } else if (header == "x,mean_photons,value") {
        x_col = 1;
        y_col = 2;
        n_fields = 3;
    } else {
        throw SchemaError(path + ":1: bad curve header '" + header + "'");
    }
    fit::ObservableCurve c;
    c.kind = kind;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        const std::string where = path + ":" + std::to_string(line_no);
        if (static_cast<int>(fields.size()) != n_fields)
            throw SchemaError(where + ": expected " + std::to_string(n_fields) + " fields");
        const double x = parse_double(fields[static_cast<size_t>(x_col)], where);
        const double y = parse_double(fields[static_cast<size_t>(y_col)], where);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;  // missing-value markers
        c.x.push_back(x);
        c.y.push_back(y);
        if (sigma_col >= 0)
            c.sigma.push_back(parse_double(fields[static_cast<size_t>(sigma_col)], where));
    }
    c.validate();
    return c;
}

void write_curve(const std::string& path, const fit::ObservableCurve& curve) {
    curve.validate();
    std::ofstream out = open_for_write(path);
    const bool with_sigma = !curve.sigma.empty();
    out << (with_sigma ? "x,value,sigma" : "x,value") << "\n";
    for (size_t i = 0; i < curve.x.size(); ++i) {
        out << format_double(curve.x[i]) << ',' << format_double(curve.y[i]);
        if (with_sigma) out << ',' << format_double(curve.sigma[i]);
        out << "\n";
    }
}

void write_forward_curve(const std::string& path, const std::vector<double>& intensity,
                         const std::vector<double>& mean_photons,
                         const std::vector<double>& values) {
    std::ofstream out = open_for_write(path);
    out << "x,mean_photons,value\n";
    for (size_t i = 0; i < intensity.size(); ++i)
        out << format_double(intensity[i]) << ',' << format_double(mean_photons[i]) << ','
            << format_double(values[i]) << "\n";
}

// --- INI ----------------------------------------------------------------------

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream in = open_for_read(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

IniFile IniFile::parse_string(const std::string& text) {
    IniFile ini;
    std::string section;
    int line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                throw SchemaError("config line " + std::to_string(line_no) +
                                  ": unterminated section");
            section = trim(stripped.substr(1, stripped.size() - 2));
            ini.sections_[section];
            continue;
        }
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw SchemaError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        ini.sections_[section][trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
    }
    return ini;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_double(get(section, key, ""), "[" + section + "] " + key);
}

std::int64_t IniFile::get_int(const std::string& section, const std::string& key,
                              std::int64_t fallback) const {
    const double v = get_double(section, key, static_cast<double>(fallback));
    if (v != std::floor(v))
        throw SchemaError("[" + section + "] " + key + ": expected an integer");
    return static_cast<std::int64_t>(v);
}

fit::FitConfig read_fit_config(const std::string& path) {
    const IniFile ini = IniFile::parse_file(path);
    for (const auto& [section, kv] : ini.sections()) {
        (void)kv;
        static const std::vector<std::string> known = {"fit",  "grid",    "detector",
                                                       "fock", "weights", "bounds"};
        if (std::find(known.begin(), known.end(), section) == known.end())
            throw SchemaError(path + ": unknown config section [" + section + "]");
    }
    fit::FitConfig cfg;
    const std::string mode = ini.get("fit", "mode", "fixed_phases");
    if (mode == "fixed_phases")
        cfg.mode = fit::ParamMode::fixed_phases;
    else if (mode == "free_squeezing_phase")
        cfg.mode = fit::ParamMode::free_squeezing_phase;
    else
        throw SchemaError(path + ": unknown fit mode '" + mode + "'");
    if (ini.has("fit", "seed"))
        cfg.seed = static_cast<std::uint64_t>(ini.get_int("fit", "seed", 0));
    cfg.random_draws = static_cast<int>(ini.get_int("fit", "random_draws", cfg.random_draws));
    cfg.keep_top = static_cast<int>(ini.get_int("fit", "keep_top", cfg.keep_top));
    cfg.de_population = static_cast<int>(ini.get_int("fit", "de_population", cfg.de_population));
    cfg.de_generations =
        static_cast<int>(ini.get_int("fit", "de_generations", cfg.de_generations));
    cfg.de_crossover = ini.get_double("fit", "de_crossover", cfg.de_crossover);
    cfg.annealing_iterations =
        static_cast<int>(ini.get_int("fit", "annealing_iterations", cfg.annealing_iterations));
    cfg.local_search_every =
        static_cast<int>(ini.get_int("fit", "local_search_every", cfg.local_search_every));
    cfg.endpoint_weight_factor =
        ini.get_double("fit", "endpoint_weight_factor", cfg.endpoint_weight_factor);
    cfg.range_penalty_factor =
        ini.get_double("fit", "range_penalty_factor", cfg.range_penalty_factor);
    cfg.normalize_by_i0 = ini.get_int("fit", "normalize_by_i0", 0) != 0;
    cfg.g2_use_rate_form = ini.get_int("fit", "g2_use_rate_form", 1) != 0;
    cfg.threads = static_cast<int>(ini.get_int("fit", "threads", cfg.threads));

    const double i_min = ini.get_double("grid", "i_min", 0.15);
    const double i_max = ini.get_double("grid", "i_max", 0.55);
    const int points = static_cast<int>(ini.get_int("grid", "points", 12));
    cfg.grid = model::IntensityGrid::linspace(i_min, i_max, points);

    cfg.setup.eta_h = ini.get_double("detector", "eta_h", cfg.setup.eta_h);
    cfg.setup.eta_a = ini.get_double("detector", "eta_a", cfg.setup.eta_a);
    cfg.setup.eta_b = ini.get_double("detector", "eta_b", cfg.setup.eta_b);
    cfg.setup.t_split = ini.get_double("detector", "t_split", cfg.setup.t_split);
    cfg.setup.n_pulses = ini.get_int("detector", "n_pulses", cfg.setup.n_pulses);

    cfg.fock.n_max = static_cast<int>(ini.get_int("fock", "n_max", cfg.fock.n_max));
    cfg.fock.n_work = static_cast<int>(ini.get_int("fock", "n_work", cfg.fock.n_work));
    cfg.fock.leak_tol = ini.get_double("fock", "leak_tol", cfg.fock.leak_tol);

    if (auto s = ini.sections().find("weights"); s != ini.sections().end())
        for (const auto& [key, value] : s->second)
            cfg.weights[fit::kind_from_string(key)] =
                parse_double(value, "[weights] " + key);
    if (auto s = ini.sections().find("bounds"); s != ini.sections().end())
        for (const auto& [key, value] : s->second) {
            const auto parts = split(value, ',');
            if (parts.size() != 2)
                throw SchemaError("[bounds] " + key + ": expected 'lo, hi'");
            cfg.bounds[key] = {parse_double(parts[0], "[bounds] " + key),
                               parse_double(parts[1], "[bounds] " + key)};
        }
    cfg.validate();
    return cfg;
}

} // namespace qstat::io
