#include "rmf/io/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace rmf::io {

namespace {

constexpr char kMagic[4] = {'S', 'P', 'D', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(std::uint8_t(bits >> (8 * i)));
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint64_t offset() const { return pos_; }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw CorruptArchive("archive truncated", pos_);
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    c = ::crc32(c, bytes.data() + done, chunk);
    done += chunk;
  }
  return std::uint32_t(c);
}

std::vector<SpdMatrixd> TrialArchive::covariances() const {
  if (kind != ArchiveKind::Covariance) throw InvalidInput("archive does not hold covariance matrices");
  std::vector<SpdMatrixd> out;
  out.reserve(payload.size());
  for (const auto& m : payload) out.emplace_back(m);
  return out;
}

void validate(const TrialArchive& a) {
  if (a.kind != ArchiveKind::TimeSeries && a.kind != ArchiveKind::Covariance) throw InvalidInput("archive: unknown kind");
  if (a.labels.empty()) throw InvalidInput("archive: n_trials must be >= 1");
  if (a.n_classes < 1) throw InvalidInput("archive: n_classes must be >= 1");
  if (a.rows < 1 || a.cols < 1) throw InvalidInput("archive: dimensions must be >= 1");
  if (a.kind == ArchiveKind::Covariance && a.rows != a.cols) throw InvalidInput("archive: covariance must be square");
  if (a.payload.size() != a.labels.size()) throw InvalidInput("archive: payload and labels differ in length");
  for (std::size_t t = 0; t < a.labels.size(); ++t) {
    if (a.labels[t] >= a.n_classes) throw InvalidInput("archive: label out of range at trial " + std::to_string(t));
    const auto& m = a.payload[t];
    if (m.rows() != Index(a.rows) || m.cols() != Index(a.cols))
      throw InvalidInput("archive: trial " + std::to_string(t) + " has the wrong shape");
    if (!m.allFinite()) throw InvalidInput("archive: trial " + std::to_string(t) + " has non-finite values");
  }
}

std::vector<std::uint8_t> encode_archive(const TrialArchive& a) {
  validate(a);
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kArchiveVersion);
  w.u8(std::uint8_t(a.kind));
  w.u32(std::uint32_t(a.labels.size()));
  w.u32(a.n_classes);
  if (a.kind == ArchiveKind::TimeSeries) {
    w.u32(a.rows);
    w.u32(a.cols);
  } else {
    w.u32(a.rows);
  }
  for (auto l : a.labels) w.u32(l);
  for (const auto& m : a.payload)
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) w.f64(m(r, c));
  const std::uint32_t crc = crc32(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

TrialArchive decode_archive(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw UnsupportedFormat("not a trial archive (bad magic)");
  Reader in(bytes.subspan(4));
  auto at = [&] { return in.offset() + 4; };

  const std::uint32_t version = in.u32();
  if (version != kArchiveVersion) throw UnsupportedFormat("unsupported archive version " + std::to_string(version));
  const std::uint8_t kind = in.u8();
  if (kind > 1) throw UnsupportedFormat("unknown archive kind " + std::to_string(kind));

  TrialArchive a;
  a.kind = ArchiveKind(kind);
  const std::uint64_t n_off = at();
  const std::uint32_t n_trials = in.u32();
  if (n_trials == 0) throw CorruptArchive("archive holds no trials", n_off);
  const std::uint64_t c_off = at();
  a.n_classes = in.u32();
  if (a.n_classes == 0) throw CorruptArchive("n_classes must be >= 1", c_off);
  const std::uint64_t d_off = at();
  if (a.kind == ArchiveKind::TimeSeries) {
    a.rows = in.u32();
    a.cols = in.u32();
  } else {
    a.rows = a.cols = in.u32();
  }
  if (a.rows == 0 || a.cols == 0) throw CorruptArchive("zero dimension", d_off);

  const std::uint64_t header = at();
  const std::uint64_t expected = header + 4ull * n_trials + 8ull * n_trials * a.rows * a.cols + 4ull;
  if (bytes.size() != expected)
    throw CorruptArchive("size " + std::to_string(bytes.size()) + " does not match header (expected " +
                             std::to_string(expected) + ")",
                         std::min<std::uint64_t>(bytes.size(), expected));

  const std::uint32_t stored_crc = Reader(bytes.subspan(bytes.size() - 4)).u32();
  if (crc32(bytes.first(bytes.size() - 4)) != stored_crc) throw CorruptArchive("CRC mismatch", bytes.size() - 4);

  a.labels.resize(n_trials);
  for (auto& l : a.labels) {
    const std::uint64_t off = at();
    l = in.u32();
    if (l >= a.n_classes) throw CorruptArchive("label " + std::to_string(l) + " out of range", off);
  }
  a.payload.reserve(n_trials);
  for (std::uint32_t t = 0; t < n_trials; ++t) {
    const std::uint64_t start = at();
    Eigen::MatrixXd m(a.rows, a.cols);
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) {
        const std::uint64_t off = at();
        m(r, c) = in.f64();
        if (!std::isfinite(m(r, c))) throw CorruptArchive("non-finite value", off);
      }
    if (a.kind == ArchiveKind::Covariance) {
      if (!detail::is_symmetric(m)) throw CorruptArchive("covariance trial is not symmetric", start);
      try {
        SpdMatrixd check(m);
      } catch (const InvalidInput& e) {
        throw CorruptArchive(std::string("covariance trial rejected: ") + e.what(), start);
      }
    }
    a.payload.push_back(std::move(m));
  }
  return a;
}

void write_archive(const TrialArchive& a, const std::filesystem::path& path) {
  const auto bytes = encode_archive(a);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw InvalidInput("failed writing " + path.string());
}

TrialArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_archive(bytes);
}

}  // namespace rmf::io
