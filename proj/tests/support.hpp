#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hatedet/corpus.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet::testing {

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("hatedet-test-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Instance make_instance(std::string id, std::string text, std::optional<int> label, Split split = Split::Train) {
    Instance i;
    i.id = std::move(id);
    i.text = std::move(text);
    i.label = label;
    i.split = split;
    return i;
}

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(HATEDET_FIXTURES) / name; }

}  // namespace hatedet::testing
