#include "igbd/util/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace igbd {

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double sign_test_p(int wins, int n) {
  if (n < 0 || wins < 0 || wins > n) throw std::invalid_argument("sign test needs 0 <= wins <= n");
  // Binomial coefficients accumulate exactly in doubles for n <= 1000 only
  // approximately; ldexp keeps the 2^-n scaling exact.
  double c = 1.0, tail = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (k >= wins) tail += c;
    c = c * (n - k) / (k + 1);
  }
  return std::min(std::ldexp(tail, -n), 1.0);
}

}  // namespace igbd
