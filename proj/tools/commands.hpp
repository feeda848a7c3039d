#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace flagseq::cli {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // overrides the config's seed
    int threads = 1;
    bool emit_gnuplot = false;
};

int cmd_design(const CommonArgs& args);
int cmd_verify(const CommonArgs& args);
int cmd_evaluate(const CommonArgs& args);
int cmd_estimate(const CommonArgs& args);
int cmd_bench(const CommonArgs& args);

}  // namespace flagseq::cli
