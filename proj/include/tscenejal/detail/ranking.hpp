#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace tscenejal::detail {

// Indices of the `top_n` largest scores, descending, ties by ascending id.
// One full sort over all entries.
inline std::vector<std::size_t> top_by_score(const std::vector<std::string>& ids,
                                             const std::vector<double>& scores, std::size_t top_n) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  order.resize(std::min(top_n, order.size()));
  return order;
}

}  // namespace tscenejal::detail
