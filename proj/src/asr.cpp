#include "spda/asr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spda/errors.hpp"

namespace spda {

void FreezeMask::attach(const std::vector<ParamSlot>& slots) {
  if (masks_.empty()) {
    masks_.reserve(slots.size());
    for (const ParamSlot& s : slots)
      masks_.emplace_back(static_cast<size_t>(s.w->size()), uint8_t{0});
    return;
  }
  if (masks_.size() != slots.size()) throw StateError("freeze mask: slot count mismatch");
  for (size_t k = 0; k < slots.size(); ++k)
    if (static_cast<long>(masks_[k].size()) != slots[k].w->size())
      throw StateError("freeze mask: slot shape mismatch");
}

void FreezeMask::admit_zeros(const std::vector<ParamSlot>& slots) {
  attach(slots);
  for (size_t k = 0; k < slots.size(); ++k) {
    const Tensor& w = *slots[k].w;
    std::vector<uint8_t>& m = masks_[k];
    for (long i = 0; i < w.size(); ++i)
      if (w[i] == 0.0) m[static_cast<size_t>(i)] = 1;
  }
}

void FreezeMask::apply(const std::vector<ParamSlot>& slots) const {
  if (masks_.empty()) return;
  if (masks_.size() != slots.size()) throw StateError("freeze mask: slot count mismatch");
  for (size_t k = 0; k < slots.size(); ++k) {
    Tensor& w = *slots[k].w;
    const std::vector<uint8_t>& m = masks_[k];
    for (long i = 0; i < w.size(); ++i)
      if (m[static_cast<size_t>(i)]) w[i] = 0.0;
  }
}

long FreezeMask::count() const {
  long n = 0;
  for (const auto& m : masks_)
    for (uint8_t b : m) n += b;
  return n;
}

void MaskedOptimizer::step(const std::vector<ParamSlot>& slots) {
  mask_.attach(slots);
  inner_.step(slots);
  mask_.apply(slots);
  mask_.admit_zeros(slots);
}

FreezeMask magnitude_prune(const std::vector<ParamSlot>& slots, double target_sparsity) {
  if (target_sparsity < 0.0 || target_sparsity > 1.0 || !std::isfinite(target_sparsity))
    throw std::invalid_argument("target sparsity outside [0,1]");
  FreezeMask mask;
  mask.attach(slots);

  struct Entry {
    double mag;
    size_t slot;
    long coord;
  };
  std::vector<Entry> entries;
  for (size_t k = 0; k < slots.size(); ++k) {
    if (!slots[k].regularized) continue;
    const Tensor& w = *slots[k].w;
    for (long i = 0; i < w.size(); ++i) entries.push_back({std::abs(w[i]), k, i});
  }
  long take = static_cast<long>(target_sparsity * static_cast<double>(entries.size()));
  if (take > static_cast<long>(entries.size())) take = static_cast<long>(entries.size());
  // stable sort keeps traversal order, so ties resolve to the lower flat index
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.mag < b.mag; });
  for (long i = 0; i < take; ++i)
    mask.data()[entries[static_cast<size_t>(i)].slot]
        [static_cast<size_t>(entries[static_cast<size_t>(i)].coord)] = 1;
  return mask;
}

}  // namespace spda
