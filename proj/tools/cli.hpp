#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fsnt {

class HttpServer;

// Lets an embedding caller (tests) observe and stop `serve` instead of
// relying on signals.
struct CliHooks {
    std::function<void(HttpServer&, int port)> serve_started;
};

// Runs one `fsnt` command line. Returns the process exit status: 0 on
// success, 1 for unexpected failures, 2 for usage errors and 10+ for the
// library error codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliHooks* hooks = nullptr);

}  // namespace fsnt
