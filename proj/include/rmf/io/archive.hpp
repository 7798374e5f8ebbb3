#pragma once

// Binary trial archive, little-endian:
//
//   "SPDT" | version u32 = 1 | kind u8 (0 time-series, 1 covariance)
//   | n_trials u32 | n_classes u32
//   | kind 0: channels u32, samples u32   kind 1: dim u32
//   | labels u32 x n_trials
//   | payload f64, row-major per trial, trials in order
//   | CRC-32 (zlib polynomial) of every preceding byte, u32
//
// Dataset/subject/session identifiers are not stored in the file.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmf/spd.hpp"

namespace rmf::io {

enum class ArchiveKind : std::uint8_t { TimeSeries = 0, Covariance = 1 };

inline constexpr std::uint32_t kArchiveVersion = 1;

struct TrialArchive {
  ArchiveKind kind = ArchiveKind::Covariance;
  std::uint32_t n_classes = 0;
  std::uint32_t rows = 0;  // channels (time-series) or dim (covariance)
  std::uint32_t cols = 0;  // samples (time-series) or dim (covariance)
  std::vector<std::uint32_t> labels;
  std::vector<Eigen::MatrixXd> payload;

  std::string dataset;
  std::string subject;
  std::string session;

  std::size_t n_trials() const { return labels.size(); }
  /// Covariance payload as validated SPD matrices.
  std::vector<SpdMatrixd> covariances() const;
};

/// Structural checks shared by the writer and the reader (byte offsets are not meaningful here).
void validate(const TrialArchive& a);

std::vector<std::uint8_t> encode_archive(const TrialArchive& a);
TrialArchive decode_archive(std::span<const std::uint8_t> bytes);

void write_archive(const TrialArchive& a, const std::filesystem::path& path);
TrialArchive read_archive(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace rmf::io
