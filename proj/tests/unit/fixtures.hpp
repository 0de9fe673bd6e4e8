// Copyright 2026 The zsrec Authors.
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

// Small hand-built datasets for unit tests.
#pragma once

#include "zsrec/dataset.hpp"
#include "zsrec/random.hpp"

namespace zsrec::testing {

// Three users with 2 attributes, 1 context field and 2 target fields:
//   user 0: behavior items 1,2,3 (actions 1,2,1)
//   user 1: no behavior (new)
//   user 2: behavior items 4,5,6,7,8 with max_seq_len 4 (truncated)
inline Dataset tiny_dataset(Index dim = 4, Index max_seq_len = 4) {
  Dataset d;
  d.spec.embedding_dim = dim;
  d.spec.max_seq_len = max_seq_len;
  d.spec.attribute_vocab = {4, 3};
  d.spec.context_vocab = {3};
  d.spec.target_vocab = {9, 3};
  d.spec.item_vocab = 9;
  d.spec.action_vocab = 3;
  d.users = {
      {"u0", {1, 2}, {1, 2, 3}, {1, 2, 1}},
      {"u1", {2, 1}, {}, {}},
      {"u2", {3, 2}, {4, 5, 6, 7, 8}, {1, 1, 2, 2, 1}},
  };
  d.train_days = 1;
  ImpressionTable& t = d.train;
  t.user = {0, 1, 2, 0};
  t.day = {1, 1, 1, 1};
  t.label = {1, 0, 1, 0};
  t.context = IdMatrix(4, 1);
  t.context << 1, 2, 1, 2;
  t.target = IdMatrix(4, 2);
  t.target << 3, 1, 5, 2, 8, 1, 2, 2;
  d.withheld_items.resize(3);
  d.withheld_actions.resize(3);
  return d;
}

}  // namespace zsrec::testing
