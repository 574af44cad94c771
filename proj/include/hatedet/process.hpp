#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hatedet {

struct CommandResult {
    int exit_code = 0;
    std::string output;  // captured stdout
};

/// Runs argv[0] with the remaining arguments through /bin/sh, each argument
/// single-quoted. Stderr is inherited.
CommandResult run_command(const std::vector<std::string>& argv);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "hatedet");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace hatedet
