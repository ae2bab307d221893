#pragma once

#include <string>
#include <vector>

namespace deepindex::cli {

// Runs one CLI invocation (arguments exclude the program name).
// Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.
int run(const std::vector<std::string>& args);

struct SplitFile {
    std::vector<std::string> train_ids, val_ids, test_ids;
};

std::string split_file_name(int fold, const std::string& mult_token);
SplitFile read_split_file(const std::string& path);

// Canonical checkpoint stem, e.g. mlp_x2_fold0.
std::string checkpoint_stem(const std::string& model, const std::string& mult_token, int fold);

}  // namespace deepindex::cli
