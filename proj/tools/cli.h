/*
 * Copyright 2026 The obdistill Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// obdistill command line: distill, eval, bench-inference, mask-report,
// importances, env-info.

#ifndef OBDISTILL_TOOLS_CLI_H_
#define OBDISTILL_TOOLS_CLI_H_

#include <ostream>

namespace obdistill {

// Exit status: 0 on success, 1 on a pipeline failure, 2 on a usage error.
// Failures print {"error": {"code", "message"}} on `err`.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace obdistill

#endif  // OBDISTILL_TOOLS_CLI_H_
