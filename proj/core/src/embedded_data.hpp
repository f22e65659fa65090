#pragma once

#include <string_view>
#include <vector>

namespace tutor::detail {

// Contents of a file under data/, compiled in at build time. Throws ConfigError if absent.
std::string_view embedded_file(std::string_view relative_path);
std::vector<std::string_view> embedded_files_with_prefix(std::string_view prefix);

}  // namespace tutor::detail
