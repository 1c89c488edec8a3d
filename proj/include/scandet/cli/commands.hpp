/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scandet::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitIo = 1,
    kExitConfig = 2,
    kExitGroundTruth = 3,
};

/// Runs the command line `args` (args[0] is the program name). Diagnostics go
/// to `err` as a single `scandet: error kind=... exit=... message="..."` line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Quartiles of `values` with linear interpolation between order statistics:
/// {min, q1, median, q3, max}. `values` must not be empty.
std::vector<double> five_number_summary(std::vector<double> values);

}// namespace scandet::cli
