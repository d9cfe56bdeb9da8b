#ifndef MATHSEARCH_CLI_HPP
#define MATHSEARCH_CLI_HPP

#include <ostream>

namespace mathsearch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitBadQuery = 2;

/// Entry point of the `mathsearch` tool: build, query, serve, parse.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mathsearch

#endif  // MATHSEARCH_CLI_HPP
