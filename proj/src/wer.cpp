// Copyright 2026 The envasr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "envasr/wer.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace envasr {

double EditCounts::rate() const {
  if (reference_words == 0) throw std::invalid_argument("word error rate of an empty reference");
  return static_cast<double>(edits()) / static_cast<double>(reference_words);
}

EditCounts& EditCounts::operator+=(const EditCounts& other) {
  substitutions += other.substitutions;
  insertions += other.insertions;
  deletions += other.deletions;
  reference_words += other.reference_words;
  return *this;
}

std::vector<std::string> split_words(std::string_view text) {
  std::istringstream ss{std::string(text)};
  std::vector<std::string> words;
  for (std::string w; ss >> w;) words.push_back(std::move(w));
  return words;
}

EditCounts align_words(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  const std::size_t m = reference.size(), n = hypothesis.size();
  std::vector<std::size_t> cost((m + 1) * (n + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (n + 1) + j]; };
  for (std::size_t i = 0; i <= m; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= n; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditCounts counts;
  counts.reference_words = m;
  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1)) {
      counts.substitutions += reference[i - 1] == hypothesis[j - 1] ? 0 : 1;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  if (reference.empty()) throw std::invalid_argument("wer: empty reference");
  return align_words(reference, hypothesis).rate();
}

std::string format_wer_report(const EditCounts& counts) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "wer %.6f subs %zu ins %zu dels %zu", counts.rate(), counts.substitutions,
                counts.insertions, counts.deletions);
  return buf;
}

}  // namespace envasr
