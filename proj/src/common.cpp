#include "appray/common.hpp"

#include <cmath>
#include <cstdio>

namespace appray {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::MissingBounds: return "MissingBounds";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::CorruptStore: return "CorruptStore";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DeviceUnresponsive: return "DeviceUnresponsive";
    case ErrorKind::UnparseableAction: return "UnparseableAction";
    case ErrorKind::BadTarget: return "BadTarget";
    case ErrorKind::DegenerateBounds: return "DegenerateBounds";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::NoNegativesAvailable: return "NoNegativesAvailable";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::UnsupportedType: return "UnsupportedType";
    case ErrorKind::QuotaUnsatisfiable: return "QuotaUnsatisfiable";
    case ErrorKind::ClientFailure: return "ClientFailure";
    case ErrorKind::BadArgs: return "BadArgs";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

double Rng::normal() {
  // Box-Muller; draws two uniforms per call so the stream stays aligned.
  double u1 = next_double();
  double u2 = next_double();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace appray
