#include "pspin/tensor.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pspin/montecarlo.hpp"

namespace pspin {

namespace {

constexpr std::uint16_t kFormatVersion = 1;

void check_cap(const MixtureSpec& spec, int N, std::uint64_t cap) {
  std::uint64_t total = TensorStack::total_entries(spec, N);
  if (total > cap)
    throw CapExceeded("tensor stack needs " + std::to_string(total) +
                      " entries, cap is " + std::to_string(cap));
}

// CRC-32 (IEEE 802.3), table-driven.
std::uint32_t crc32(const unsigned char* data, size_t len, std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return ~crc;
}

}  // namespace

std::uint64_t TensorStack::total_entries(const MixtureSpec& spec, int N) {
  std::uint64_t total = 0;
  for (auto& [p, c] : spec.coefficients) total += ipow(std::uint64_t(N), p);
  return total;
}

TensorStack TensorStack::zero(const MixtureSpec& spec, int N, std::uint64_t cap) {
  if (N < 1) throw ValidationError("tensor: N must be >= 1");
  check_cap(spec, N, cap);
  TensorStack g{spec, N, {}};
  for (auto& [p, c] : spec.coefficients)
    g.blocks.push_back(Eigen::VectorXd::Zero(Eigen::Index(ipow(std::uint64_t(N), p))));
  return g;
}

TensorStack sample_disorder(const MixtureSpec& spec, int N, std::uint64_t seed,
                            std::uint64_t cap) {
  TensorStack g = TensorStack::zero(spec, N, cap);
  for (size_t d = 0; d < spec.coefficients.size(); ++d) {
    GaussianStream stream(derive_seed(seed, std::uint64_t(spec.coefficients[d].first)));
    auto& block = g.blocks[d];
    for (Eigen::Index i = 0; i < block.size(); ++i) block[i] = stream.next();
  }
  return g;
}

TensorStack ou_couple(const TensorStack& g, const TensorStack& g_prime,
                      const CoupleParams& params) {
  if (!g.same_shape(g_prime)) throw ShapeMismatch("ou_couple: stacks differ in shape");
  if (params.t < 0) throw ValidationError("ou_couple: t must be >= 0");
  double a = std::exp(-params.t);
  double b = std::sqrt(1.0 - a * a);
  TensorStack out{g.spec, g.N, {}};
  out.blocks.reserve(g.blocks.size());
  for (size_t d = 0; d < g.blocks.size(); ++d)
    out.blocks.push_back(a * g.blocks[d] + b * g_prime.blocks[d]);
  return out;
}

TensorStack gauge_transform(const TensorStack& g, const SpinVector& eps) {
  if (eps.size() != g.N) throw ShapeMismatch("gauge_transform: eps length != N");
  const int N = g.N;
  TensorStack out{g.spec, N, g.blocks};
  std::vector<double> ev(N);
  for (int i = 0; i < N; ++i) ev[i] = double(eps[i]);
  for (size_t d = 0; d < out.blocks.size(); ++d) {
    const int p = g.spec.coefficients[d].first;
    auto& block = out.blocks[d];
    // odometer over tuple digits, sign maintained as a prefix product
    std::vector<int> digit(p, 0);
    std::vector<double> prefix(p + 1, 1.0);
    for (int j = 0; j < p; ++j) prefix[j + 1] = prefix[j] * ev[0];
    const Eigen::Index total = block.size();
    for (Eigen::Index f = 0;; ++f) {
      block[f] *= prefix[p];
      if (f + 1 == total) break;
      int j = p - 1;
      while (digit[j] == N - 1) digit[j--] = 0;
      ++digit[j];
      for (int q = j; q < p; ++q) prefix[q + 1] = prefix[q] * ev[digit[q]];
    }
  }
  return out;
}

TensorStack featurize(const MixtureSpec& spec, int N, const SpinVector& sigma,
                      std::uint64_t cap) {
  if (sigma.size() != N) throw ShapeMismatch("featurize: sigma length != N");
  TensorStack out = TensorStack::zero(spec, N, cap);
  std::vector<double> sv(N);
  for (int i = 0; i < N; ++i) sv[i] = double(sigma[i]);
  for (size_t d = 0; d < out.blocks.size(); ++d) {
    auto [p, c] = spec.coefficients[d];
    const double coeff = c * std::pow(double(N), -0.5 * (p - 1));
    auto& block = out.blocks[d];
    std::vector<int> digit(p, 0);
    std::vector<double> prefix(p + 1, 1.0);
    for (int j = 0; j < p; ++j) prefix[j + 1] = prefix[j] * sv[0];
    const Eigen::Index total = block.size();
    for (Eigen::Index f = 0;; ++f) {
      block[f] = coeff * prefix[p];
      if (f + 1 == total) break;
      int j = p - 1;
      while (digit[j] == N - 1) digit[j--] = 0;
      ++digit[j];
      for (int q = j; q < p; ++q) prefix[q + 1] = prefix[q] * sv[digit[q]];
    }
  }
  return out;
}

double inner(const TensorStack& a, const TensorStack& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("inner: stacks differ in shape");
  double acc = 0.0;
  for (size_t d = 0; d < a.blocks.size(); ++d) {
    const auto& x = a.blocks[d];
    const auto& y = b.blocks[d];
    for (Eigen::Index i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  }
  return acc;
}

namespace {

template <class T>
void put(std::vector<unsigned char>& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));  // little-endian host assumed
}

template <class T>
T get(const std::vector<unsigned char>& buf, size_t& off) {
  if (off + sizeof(T) > buf.size()) throw IoError("stack file truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

void save_stack(const TensorStack& g, const std::filesystem::path& path) {
  std::vector<unsigned char> payload;
  put<std::uint32_t>(payload, std::uint32_t(g.N));
  put<std::uint16_t>(payload, std::uint16_t(g.spec.coefficients.size()));
  for (auto& [p, c] : g.spec.coefficients) {
    put<std::uint16_t>(payload, std::uint16_t(p));
    put<double>(payload, c);
  }
  for (auto& block : g.blocks)
    for (Eigen::Index i = 0; i < block.size(); ++i) put<double>(payload, block[i]);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write("PSPN", 4);
  std::uint16_t version = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), 2);
  out.write(reinterpret_cast<const char*>(payload.data()),
            std::streamsize(payload.size()));
  std::uint32_t crc = crc32(payload.data(), payload.size());
  out.write(reinterpret_cast<const char*>(&crc), 4);
  if (!out) throw IoError("write failed for " + path.string());
}

TensorStack load_stack(const std::filesystem::path& path, std::uint64_t cap) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 10) throw IoError("stack file truncated");
  if (std::memcmp(buf.data(), "PSPN", 4) != 0) throw BadMagic("bad magic bytes");
  std::uint16_t version;
  std::memcpy(&version, buf.data() + 4, 2);
  if (version != kFormatVersion)
    throw VersionMismatch("stack file version " + std::to_string(version) +
                          ", expected " + std::to_string(kFormatVersion));

  const size_t payload_begin = 6;
  const size_t payload_end = buf.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + payload_end, 4);
  std::uint32_t actual = crc32(buf.data() + payload_begin, payload_end - payload_begin);
  if (stored_crc != actual) throw ChecksumMismatch("stack file checksum mismatch");

  size_t off = payload_begin;
  auto N = get<std::uint32_t>(buf, off);
  auto n_degrees = get<std::uint16_t>(buf, off);
  std::vector<std::pair<int, double>> coeffs;
  for (int d = 0; d < n_degrees; ++d) {
    int p = get<std::uint16_t>(buf, off);
    double c = get<double>(buf, off);
    coeffs.emplace_back(p, c);
  }
  TensorStack g = TensorStack::zero(validate_mixture(coeffs), int(N), cap);
  for (auto& block : g.blocks)
    for (Eigen::Index i = 0; i < block.size(); ++i) block[i] = get<double>(buf, off);
  if (off != payload_end) throw IoError("stack file has trailing bytes");
  for (auto& block : g.blocks)
    if (!block.allFinite()) throw IoError("stack file contains non-finite entries");
  return g;
}

}  // namespace pspin
