#ifndef COS2PHI_CSV_HPP
#define COS2PHI_CSV_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cos2phi/calibration.hpp"
#include "cos2phi/spectra.hpp"

namespace cos2phi {

#ifdef COS2PHI_VERSION
inline constexpr const char *kToolVersion = COS2PHI_VERSION;
#else
inline constexpr const char *kToolVersion = "unknown";
#endif

// Shortest decimal that parses back to the same double; "nan", "inf", "-inf".
std::string format_number(double x);
std::string hex64(std::uint64_t x);

// Written as '#' comment lines ahead of the header.
struct Provenance {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

class CsvWriter {
  public:
    explicit CsvWriter(const Provenance &prov);
    CsvWriter() = default;

    void header(const std::vector<std::string> &names);
    void row(const std::vector<double> &values);
    void row(const std::vector<std::string> &cells);
    const std::string &str() const { return text_; }
    void write(const std::filesystem::path &path) const;

  private:
    std::string text_;
};

// Plain comma separated table; '#' lines and blank lines are skipped, the
// first remaining line is the header. No quoting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string &name) const;  // -1 when absent
};

CsvTable parse_csv(const std::string &text);
CsvTable read_csv(const std::filesystem::path &path);
// Empty cells and "nan" give NaN; anything else must parse completely.
double parse_number(const std::string &cell, const std::string &where);

std::string read_text(const std::filesystem::path &path);
void write_text(const std::filesystem::path &path, const std::string &text);

// Columns phi_bias,phi_ctrl,f01_ghz,sigma_ghz (any order, extra columns ignored).
SpectroscopyDataset dataset_from_csv(const CsvTable &table);
std::string dataset_to_csv(const SpectroscopyDataset &data, const Provenance &prov);

// First row: fbl_ma,<fbl currents>; every following row: <coil current>,<values>.
// Missing cells are empty or nan.
Heatmap heatmap_from_csv(const CsvTable &table);
std::string heatmap_to_csv(const Heatmap &h, const Provenance &prov);

}  // namespace cos2phi

#endif  // COS2PHI_CSV_HPP
