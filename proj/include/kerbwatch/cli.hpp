// Copyright 2026 The Kerbwatch Authors
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


#ifndef KERBWATCH__CLI_HPP_
#define KERBWATCH__CLI_HPP_

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace kerbwatch::app
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

using EnvLookup = std::function<std::optional<std::string>(std::string_view name)>;

/// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

/// Subcommands: run, simulate, calibrate, eval, bench, report. Every flag --some-flag can also be
/// set through KERBWATCH_SOME_FLAG, which takes precedence over the command line.
int run_cli(
  int argc, const char * const * argv, std::ostream & out, std::ostream & err,
  const EnvLookup & env = process_env);

}  // namespace kerbwatch::app

#endif  // KERBWATCH__CLI_HPP_
