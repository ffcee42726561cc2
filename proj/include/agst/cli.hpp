#pragma once

namespace agst {

/// Entry point of the `agst` tool. Returns 0 on success, 2 on usage errors
/// and 1 on any other failure.
int cli_main(int argc, char** argv);

}  // namespace agst
