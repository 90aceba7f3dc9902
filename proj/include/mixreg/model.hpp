#pragma once

#include "mixreg/distributions.hpp"
#include "mixreg/errors.hpp"

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixreg {

struct Observation
{
  double x = 0.0;
  double y = 0.0;
};

/// Ordered sample of (x, y) pairs in the canonical model, i.e. after the
/// known regression line has been subtracted from the raw response.
///
/// Construction rejects empty input and any non-finite value. Rows are never
/// dropped or reordered: bootstrap multipliers are indexed by row.
class Dataset
{
public:
  explicit Dataset(std::vector<Observation> rows)
    : rows_(std::move(rows))
  {
    if (rows_.empty()) {
      throw IngestionError("dataset must contain at least one observation");
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!std::isfinite(rows_[i].x) || !std::isfinite(rows_[i].y)) {
        throw IngestionError("non-finite value in row " + std::to_string(i), i);
      }
    }
  }

  std::size_t size() const noexcept { return rows_.size(); }
  const Observation& operator[](std::size_t i) const noexcept { return rows_[i]; }
  std::span<const Observation> rows() const noexcept { return rows_; }
  auto begin() const noexcept { return rows_.begin(); }
  auto end() const noexcept { return rows_.end(); }

private:
  std::vector<Observation> rows_;
};

/// The fully specified regression component: y = alpha* + beta* x + eps*,
/// eps* ~ f_star.
struct KnownComponent
{
  double alpha_star = 0.0;
  double beta_star = 0.0;
  ErrorDistribution f_star{};
};

/// (alpha, beta, pi) of the unknown component in the canonical model.
struct EuclideanParams
{
  double alpha = 0.0;
  double beta = 0.0;
  double pi = 1.0;

  /// pi in (0, 1]: the only range for which the mixture is identifiable.
  bool pi_valid() const noexcept { return pi > 0.0 && pi <= 1.0; }
};

/// Subtracts the known line: y_i = ytilde_i - alpha* - beta* x_i.
/// `raw` holds (x, ytilde) pairs.
inline Dataset transform_to_canonical(std::span<const Observation> raw,
                                      const KnownComponent& known)
{
  std::vector<Observation> out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Observation& r = raw[i];
    if (!std::isfinite(r.x) || !std::isfinite(r.y)) {
      throw IngestionError("non-finite value in row " + std::to_string(i), i);
    }
    out.push_back({ r.x, r.y - known.alpha_star - known.beta_star * r.x });
  }
  return Dataset(std::move(out));
}

/// Inverse of transform_to_canonical.
inline std::vector<Observation> transform_from_canonical(const Dataset& data,
                                                         const KnownComponent& known)
{
  std::vector<Observation> out;
  out.reserve(data.size());
  for (const Observation& o : data) {
    out.push_back({ o.x, o.y + known.alpha_star + known.beta_star * o.x });
  }
  return out;
}

} // namespace mixreg
