#include "argoskit/common.hpp"

#include <cmath>
#include <cstdio>

namespace argoskit {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
  return splitmix64(h ^ (index * 0x8cb92ba72f3d8dd7ULL));
}

double sample_sd(const Eigen::Ref<const Vector>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(n - 1));
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace argoskit
