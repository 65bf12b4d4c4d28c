#include <cmath>
#include <numeric>

#include "tricam/error.hpp"
#include "tricam/harness.hpp"

namespace tricam::harness {

namespace {

// Fisher-Yates driven by uniform01 so the permutation does not depend on the
// standard library's shuffle algorithm.
void shuffle(std::vector<std::size_t>& v, synth::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(synth::uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac}) {
    if (!(f > 0.0) || f >= 1.0) {
      throw Error(ErrorKind::kInvalidArgument, "split fractions must lie in (0, 1)");
    }
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument, "split fractions must sum to 1");
  }
}

Split split_dataset(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 10) {
    throw Error(ErrorKind::kEmptyDataset,
                "need at least 10 samples to split, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  synth::Rng rng(synth::derive_seed(spec.seed, 0x5b117));
  shuffle(order, rng);

  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(spec.val_frac * static_cast<double>(n)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

Samples gather(std::span<const synth::Sample> samples, std::span<const std::size_t> indices) {
  Samples out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples[i]);
  return out;
}

Experiment make_experiment(std::span<const synth::Sample> samples, const Rig& rig,
                           const SplitSpec& spec) {
  const Split s = split_dataset(samples.size(), spec);
  return {gather(samples, s.train), gather(samples, s.val), gather(samples, s.test), rig};
}

}  // namespace tricam::harness
