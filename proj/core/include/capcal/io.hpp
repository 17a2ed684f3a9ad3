#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "capcal/calibration.hpp"
#include "capcal/vzero.hpp"

/// CSV ingestion and emission for the two series formats. Display units
/// are the experimentalists' (V, pF, nm, mV); conversion to SI happens
/// here and nowhere else. Writes are atomic (write-temp-then-rename) and
/// carry 17 significant digits so that ingest -> emit -> ingest is
/// bit-lossless.
namespace capcal::io {

/// Ingestion failure with row/column diagnostics in what().
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Columns: v_pzt_V, capacitance_pF, sigma_pF (sigma optional; a file
/// without it yields has_sigma = false and routes fits to the unweighted
/// engine).
calibration::CapacitanceSeries read_capacitance_csv(
    const std::filesystem::path& path);

/// Columns: distance_nm, v0_mV, sigma_mV (sigma required, > 0).
vzero::VZeroSeries read_vzero_csv(const std::filesystem::path& path);

void write_capacitance_csv(const std::filesystem::path& path,
                           const calibration::CapacitanceSeries& series);

void write_vzero_csv(const std::filesystem::path& path,
                     const vzero::VZeroSeries& series);

/// Atomically replaces path with content.
void atomic_write(const std::filesystem::path& path,
                  const std::string& content);

}  // namespace capcal::io
