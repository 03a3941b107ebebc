#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "krrlab/harness.hpp"

namespace krrlab {

// All writers emit LF line endings and shortest round-trip decimals; failed
// trials appear as `nan`. I/O errors are std::runtime_error with the path.

void write_csv(std::ostream& out, const QuantileTable& table);
void write_csv(std::ostream& out, const RawRiskLog& log);
void write_csv(std::ostream& out, const std::vector<FnSumRow>& rows);

void export_csv(const QuantileTable& table, const std::filesystem::path& path);
void export_csv(const RawRiskLog& log, const std::filesystem::path& path);
void export_csv(const std::vector<FnSumRow>& rows, const std::filesystem::path& path);

QuantileTable read_quantile_csv(const std::filesystem::path& path);
RawRiskLog read_raw_csv(const std::filesystem::path& path);

}  // namespace krrlab
