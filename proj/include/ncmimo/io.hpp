#pragma once

#include "ncmimo/campaign.hpp"
#include "ncmimo/crb.hpp"
#include "ncmimo/estimator.hpp"
#include "ncmimo/signal.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace ncmimo {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary snapshot file, little-endian:
///   8 bytes magic "NCMSNAP1", u32 M, u32 N, u32 K, f64 noise variance, u64 seed,
///   then K * M*N complex samples as (re, im) f64 pairs, snapshot-major.
void write_snapshots(const std::filesystem::path& path, const SnapshotSet& snaps);
SnapshotSet read_snapshots(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_number(double value);

/// CSV: snr_db,parameter,unit,rmse,crb_std,trials,excluded
std::string format_rmse_csv(const RmseTable& table);

/// Header lines "# axis1 <name> <lower> <upper> <count>" and "# axis2 ...", then
/// one comma-separated line per axis1 value holding positive_ll along axis2.
std::string format_contour(const ContourGrid& grid, int order);

/// CSV: parameter,unit,crb_std
std::string format_crb_csv(const CrbResultd& crb);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ncmimo
