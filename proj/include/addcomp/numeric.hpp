#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace addcomp {

// Neumaier-compensated accumulator in extended precision.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(long double x) {
    add(x);
    return *this;
  }

  long double value() const { return sum_ + carry_; }

 private:
  long double sum_ = 0.0L;
  long double carry_ = 0.0L;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);

// Cosine similarity; returns 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

// 0.5 * (a + b)
std::vector<double> midpoint(std::span<const double> a,
                             std::span<const double> b);

}  // namespace addcomp
