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

#include <array>

#include "envasr/wer.hpp"

namespace envasr::testing {

// Reference/hypothesis pairs from published qualitative examples, with the
// edit counts implied by their colour annotation. Deletion markers
// (asterisks) are dropped from hypotheses and a trailing "soldiers..." is
// split into "soldiers ...".
struct PrintedPair {
  const char* ref;
  const char* hyp;
  EditCounts annotated;
  double rate;
};

inline const std::array<PrintedPair, 6>& printed_pairs() {
  static const std::array<PrintedPair, 6> pairs{{
      {"should i buy from the princess starfrost set royale high",
       "should i buy from the princess stare froset in we're all rawhide", {4, 2, 0, 10}, 0.6},
      {"should i buy from the princess starfrost set royale high",
       "should i buy from the princess star frost set royale high", {1, 1, 0, 10}, 0.2},
      {"read all of lisa left eye lopes songs including the thirteen more",
       "read all of lisa loeb songs including the thirteen horn", {2, 0, 2, 12}, 4.0 / 12},
      {"read all of lisa left eye lopes songs including the thirteen more",
       "read all of lisa left eye lopez songs including the thirteen more", {1, 0, 0, 12}, 1.0 / 12},
      {"... signalman he lead tenor for telephone wires so soldiers ...",
       "... signal map he'd late tenoff telephone wise soldiers ...", {6, 0, 1, 11}, 7.0 / 11},
      {"... signalman he lead tenor for telephone wires so soldiers ...",
       "... signalman he lead teno for telephone wires so soldiers ...", {1, 0, 0, 11}, 1.0 / 11},
  }};
  return pairs;
}

}  // namespace envasr::testing
