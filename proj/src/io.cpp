#include "ncmimo/io.hpp"

#include "ncmimo/scenario.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ncmimo {

namespace {

constexpr std::array<char, 8> kMagic{'N', 'C', 'M', 'S', 'N', 'A', 'P', '1'};

template <class T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(bytes.data(), bytes.size());
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  std::array<char, sizeof(T)> bytes;
  if (!is.read(bytes.data(), bytes.size())) throw IoError(path.string() + ": truncated snapshot file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_snapshots(const std::filesystem::path& path, const SnapshotSet& snaps) {
  snaps.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, snaps.tx_count);
  put<std::uint32_t>(os, snaps.rx_count);
  put<std::uint32_t>(os, snaps.snapshot_count());
  put<double>(os, snaps.noise_variance);
  put<std::uint64_t>(os, snaps.seed);
  for (int k = 0; k < snaps.snapshot_count(); ++k)
    for (int p = 0; p < snaps.path_count(); ++p) {
      put<double>(os, snaps.data(p, k).real());
      put<double>(os, snaps.data(p, k).imag());
    }
  os.flush();
  if (!os) throw IoError(path.string() + ": write failed");
}

SnapshotSet read_snapshots(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open for reading");
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw IoError(path.string() + ": not a snapshot file");
  SnapshotSet s;
  const auto m = get<std::uint32_t>(is, path);
  const auto n = get<std::uint32_t>(is, path);
  const auto k = get<std::uint32_t>(is, path);
  if (m == 0 || n == 0 || k == 0 || m > 4096 || n > 4096 || k > (1u << 24))
    throw IoError(path.string() + ": implausible dimensions");
  s.tx_count = static_cast<int>(m);
  s.rx_count = static_cast<int>(n);
  s.noise_variance = get<double>(is, path);
  s.seed = get<std::uint64_t>(is, path);
  s.data.resize(s.path_count(), static_cast<Eigen::Index>(k));
  for (Eigen::Index c = 0; c < s.data.cols(); ++c)
    for (Eigen::Index p = 0; p < s.data.rows(); ++p) {
      const double re = get<double>(is, path);
      const double im = get<double>(is, path);
      s.data(p, c) = {re, im};
    }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + ": trailing bytes");
  s.validate();
  return s;
}

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  std::array<char, 32> buf;
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw IoError("number formatting failed");
  return std::string(buf.data(), end);
}

std::string format_rmse_csv(const RmseTable& table) {
  std::string out = "snr_db,parameter,unit,rmse,crb_std,trials,excluded\n";
  for (const auto& r : table.rows) {
    out += format_number(r.snr_db) + ',' + r.parameter + ',' + r.unit + ',' + format_number(r.rmse) + ',' +
           format_number(r.crb_std) + ',' + std::to_string(r.trials) + ',' + std::to_string(r.excluded) + '\n';
  }
  return out;
}

std::string format_contour(const ContourGrid& grid, int order) {
  if (grid.values.size() == 0) throw IoError("contour grid is empty");
  auto header = [&](const char* tag, const GridAxis& a) {
    return std::string("# ") + tag + ' ' + parameter_name(order, a.parameter) + ' ' + format_number(a.lower) + ' ' +
           format_number(a.upper) + ' ' + std::to_string(a.count) + '\n';
  };
  std::string out = header("axis1", grid.rows) + header("axis2", grid.cols);
  for (Eigen::Index i = 0; i < grid.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.values.cols(); ++j) {
      if (j) out += ',';
      out += format_number(grid.values(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string format_crb_csv(const CrbResultd& crb) {
  std::string out = "parameter,unit,crb_std\n";
  for (Eigen::Index i = 0; i < crb.psi_std.size(); ++i) {
    const int idx = static_cast<int>(i);
    out += parameter_name(crb.layout.order, idx) + ',' + parameter_unit(crb.layout.order, idx) + ',' +
           format_number(crb.psi_std(i)) + '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  os << text;
  os.flush();
  if (!os) throw IoError(path.string() + ": write failed");
}

}  // namespace ncmimo
