#pragma once

#include <iosfwd>

namespace osp::cli {

/// Entry point of the `osp` tool. Returns 0 on success, 2 on invalid input
/// and 3 on numerical failure.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace osp::cli
