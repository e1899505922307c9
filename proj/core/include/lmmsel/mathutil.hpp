#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

namespace lmmsel {

/// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
/// Requires p in (0, 1).
double standard_normal_quantile(double p);

/// Upper critical value z_a with P(Z > z_a) = a for a standard normal Z.
inline double normal_upper_critical(double a) { return standard_normal_quantile(1.0 - a); }

/// Cholesky of a symmetric positive definite matrix. On failure retries once
/// with diagonal jitter 1e-10 * trace/dim, then reports failure.
bool cholesky_spd(const Eigen::MatrixXd& m, Eigen::LLT<Eigen::MatrixXd>& llt);

/// log det of an SPD matrix from its Cholesky factor.
double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt);

/// FNV-1a 64-bit hash, used for config/input digests.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace lmmsel
