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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace envasr {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_words = 0;

  std::size_t edits() const { return substitutions + insertions + deletions; }
  /// Pooled error rate; throws if no reference words were counted.
  double rate() const;
  EditCounts& operator+=(const EditCounts& other);
};

std::vector<std::string> split_words(std::string_view text);

/// Minimum-cost word alignment with unit substitution, insertion and
/// deletion costs. Among optimal alignments the backtrace prefers matches
/// and substitutions, then deletions, then insertions.
EditCounts align_words(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// Edit distance over reference length. Throws on an empty reference.
double wer(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// `wer <value> subs <n> ins <n> dels <n>`
std::string format_wer_report(const EditCounts& counts);

}  // namespace envasr
