#pragma once

#include <cstddef>
#include <deque>
#include <span>

#include "dtg/numerics.hpp"

namespace dtg {

/// FIFO dictionary of the last `capacity` guidance features, used as
/// negatives. Oldest entries are evicted first.
class GuidanceQueue {
 public:
  /// `check_unit_norm` rejects entries whose norm differs from 1 by more than 1e-10.
  GuidanceQueue(std::size_t capacity, std::size_t dim, bool check_unit_norm = true);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// True once the queue has been full; stays true since entries are only replaced.
  bool warm() const noexcept { return entries_.size() == capacity_; }

  /// Appends rows in order; evicts the oldest so that size() <= capacity().
  /// Validates the whole batch before mutating.
  void enqueue_batch(const Matrix& feats);
  void enqueue(std::span<const double> feat);

  /// Snapshot of the entries, oldest first (capacity x dim). Throws ColdQueueError.
  Matrix negatives() const;

  std::span<const double> entry(std::size_t i) const { return entries_.at(i); }

 private:
  void check(std::span<const double> feat) const;

  std::size_t capacity_;
  std::size_t dim_;
  bool check_unit_norm_;
  std::deque<Vector> entries_;
};

}  // namespace dtg
