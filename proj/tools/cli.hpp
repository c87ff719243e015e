#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace distpd_cli {

// Exit codes: 0 success, 1 configuration error, 2 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

const std::vector<std::string>& subcommands();

// Schema with defaults for one subcommand ("section.key" -> value).
std::map<std::string, std::string> default_config(const std::string& subcommand);

}  // namespace distpd_cli
