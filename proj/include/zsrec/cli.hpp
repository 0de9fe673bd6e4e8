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

#pragma once

#include <string>
#include <vector>

namespace zsrec {

// Runs one command line (args excludes the program name) and returns the
// process exit status: 0 ok, 2 config error, 3 data error, 4 numeric
// failure. Failures print one "error[<kind>] <message>" line to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace zsrec
