// Copyright 2026 The pfnas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef PFNAS_CLI_APP_H_
#define PFNAS_CLI_APP_H_

namespace pfnas::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,      // bad config, flag or missing input
  kExitInfeasible = 3,  // a budget or learning-rate constraint cannot be met
  kExitRuntime = 4,
};

// Entry point of the `pfnas` tool: nas | hpo | train | attack | bounds | report.
int run_app(int argc, const char* const* argv);

}  // namespace pfnas::cli

#endif  // PFNAS_CLI_APP_H_
