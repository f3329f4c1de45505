#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace simflow::cli {

enum ExitCode : int { ok = 0, invalid = 1, fault = 2, usage = 64 };

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simflow::cli
