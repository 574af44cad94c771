#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

namespace hatedet {

struct CacheStats {
    std::size_t entries = 0;
    std::size_t hits = 0;
    std::size_t misses = 0;

    friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

/// String-keyed store of JSON records with hit/miss accounting.
///
/// `lookup` counts a hit or a miss; `peek` does not. Implementations must be
/// safe for concurrent use.
class KeyValueStore {
public:
    virtual ~KeyValueStore() = default;

    std::optional<nlohmann::json> lookup(const std::string& key);
    [[nodiscard]] virtual std::optional<nlohmann::json> peek(const std::string& key) const = 0;
    virtual void put(const std::string& key, const nlohmann::json& value) = 0;
    [[nodiscard]] virtual std::size_t entries() const = 0;

    [[nodiscard]] CacheStats stats() const { return {entries(), hits_.load(), misses_.load()}; }

private:
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

class MemoryStore final : public KeyValueStore {
public:
    [[nodiscard]] std::optional<nlohmann::json> peek(const std::string& key) const override;
    void put(const std::string& key, const nlohmann::json& value) override;
    [[nodiscard]] std::size_t entries() const override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, nlohmann::json> data_;
};

/// One JSON file per entry under `<root>/<namespace>/`. File names are the
/// SHA-256 of the key so arbitrary keys are safe on any filesystem; the key
/// itself is stored inside the record.
class DiskStore final : public KeyValueStore {
public:
    DiskStore(std::filesystem::path root, std::string name_space);

    [[nodiscard]] std::optional<nlohmann::json> peek(const std::string& key) const override;
    void put(const std::string& key, const nlohmann::json& value) override;
    [[nodiscard]] std::size_t entries() const override;

    [[nodiscard]] const std::filesystem::path& directory() const noexcept { return dir_; }

private:
    [[nodiscard]] std::filesystem::path path_for(const std::string& key) const;
    std::mutex& lock_for(const std::string& key) const;

    std::filesystem::path dir_;
    mutable std::array<std::mutex, 16> stripes_;
};

}  // namespace hatedet
