#ifndef QSTAT_IO_HPP
#define QSTAT_IO_HPP

#include <map>
#include <string>
#include <vector>

#include "qstat/detect.hpp"
#include "qstat/fit.hpp"
#include "qstat/model.hpp"

namespace qstat::io {

inline constexpr const char* kVersion = "0.1.0";

/// 12 significant digits; stable under write -> read -> write.
std::string format_double(double v);

// --- click record CSV ------------------------------------------------------
// Header: intensity,R0,R1A,R1B,R2,RSA,RSB,RC,NP
// Counts are non-negative integers, intensity a decimal.

struct RecordRow {
    double intensity = 0;
    detect::ClickRecord record;
};

std::vector<RecordRow> read_click_records(const std::string& path);
void write_click_records(const std::string& path, const std::vector<RecordRow>& rows);

// --- model parameter file ---------------------------------------------------
// Flat `key = value` lines; keys mirror the model parameter table
// (thermal/squeezing/displacement scale+exponent per mode, phases,
// beamsplitter angles, intensity factor).

model::ModelParams read_model_params(const std::string& path);
void write_model_params(const std::string& path, const model::ModelParams& p);

// --- observable curve CSV -----------------------------------------------------
// Data curves: header `x,value[,sigma]` with x the mean photon number.
// Forward outputs (header `x,mean_photons,value`) are accepted too, the
// mean-photon column becoming the curve x.

fit::ObservableCurve read_curve(const std::string& path, fit::ObservableKind kind);
void write_curve(const std::string& path, const fit::ObservableCurve& curve);

/// One forward CSV with columns x,mean_photons,value (x = intensity).
void write_forward_curve(const std::string& path, const std::vector<double>& intensity,
                         const std::vector<double>& mean_photons,
                         const std::vector<double>& values);

// --- INI-style config ---------------------------------------------------------

class IniFile {
public:
    static IniFile parse_file(const std::string& path);
    static IniFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Assemble a FitConfig from the [fit], [grid], [detector], [fock],
/// [weights] and [bounds] sections; unknown keys raise SchemaError.
fit::FitConfig read_fit_config(const std::string& path);

} // namespace qstat::io

#endif
