#include "addcomp/numeric.hpp"

#include <cassert>

#include "addcomp/error.hpp"

namespace addcomp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::Decode: return "decode";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Statistics: return "statistics";
    case ErrorKind::Training: return "training";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Normalization: return "normalization";
  }
  return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.add(static_cast<long double>(a[i]) * b[i]);
  }
  return static_cast<double>(s.value());
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - b[i];
    s.add(d * d);
  }
  return static_cast<double>(std::sqrt(s.value()));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

std::vector<double> midpoint(std::span<const double> a,
                             std::span<const double> b) {
  assert(a.size() == b.size());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
  return out;
}

}  // namespace addcomp
