#include "dtg/queue.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dtg/errors.hpp"

namespace dtg {

GuidanceQueue::GuidanceQueue(std::size_t capacity, std::size_t dim, bool check_unit_norm)
    : capacity_(capacity), dim_(dim), check_unit_norm_(check_unit_norm) {
  if (capacity == 0 || dim == 0) throw InvalidArgument("GuidanceQueue: capacity and dim must be >= 1");
}

void GuidanceQueue::check(std::span<const double> feat) const {
  if (feat.size() != dim_) {
    throw InvalidArgument("GuidanceQueue: feature dim " + std::to_string(feat.size()) +
                          " != " + std::to_string(dim_));
  }
  if (!all_finite(feat)) throw NumericError("GuidanceQueue: non-finite feature");
  if (check_unit_norm_ && std::abs(norm(feat) - 1.0) > 1e-10) {
    throw InvalidArgument("GuidanceQueue: feature is not unit-norm");
  }
}

void GuidanceQueue::enqueue_batch(const Matrix& feats) {
  if (feats.rows() == 0) return;
  for (std::size_t r = 0; r < feats.rows(); ++r) check(feats.row(r));
  // Only the newest `capacity` rows can survive.
  const std::size_t first = feats.rows() > capacity_ ? feats.rows() - capacity_ : 0;
  for (std::size_t r = first; r < feats.rows(); ++r) {
    if (entries_.size() == capacity_) entries_.pop_front();
    entries_.emplace_back(feats.row(r).begin(), feats.row(r).end());
  }
}

void GuidanceQueue::enqueue(std::span<const double> feat) {
  check(feat);
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.emplace_back(feat.begin(), feat.end());
}

Matrix GuidanceQueue::negatives() const {
  if (!warm()) {
    throw ColdQueueError("GuidanceQueue: only " + std::to_string(entries_.size()) + " of " +
                         std::to_string(capacity_) + " entries filled");
  }
  Matrix out(capacity_, dim_);
  for (std::size_t i = 0; i < capacity_; ++i) {
    std::copy(entries_[i].begin(), entries_[i].end(), out.row(i).begin());
  }
  return out;
}

}  // namespace dtg
