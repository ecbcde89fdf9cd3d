#pragma once

#include <vector>

namespace igbd {

double mean(const std::vector<double>& v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(const std::vector<double>& v);
// Average of the two middle values for even sizes.
double median(std::vector<double> v);

// P(X >= wins) for X ~ Binomial(n, 1/2): the one-sided sign-test p-value
// with ties already removed from n.
double sign_test_p(int wins, int n);

}  // namespace igbd
