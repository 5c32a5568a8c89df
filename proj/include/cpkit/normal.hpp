#pragma once

namespace cpkit {

// Standard normal density, CDF, and inverse CDF.
//
// The CDF is evaluated through erfc. The inverse starts from a rational
// approximation and applies one Newton step against the erfc-based CDF,
// which holds |cdf(inv_cdf(u)) - u| below 1e-9 across [1e-6, 1 - 1e-6].
double std_normal_pdf(double z);
double std_normal_cdf(double z);
double std_normal_inv_cdf(double u); // DomainError for u outside (0, 1)

} // namespace cpkit
