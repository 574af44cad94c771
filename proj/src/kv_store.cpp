#include "hatedet/kv_store.hpp"

#include "hatedet/errors.hpp"
#include "hatedet/json_util.hpp"
#include "hatedet/text_util.hpp"

namespace hatedet {

std::optional<nlohmann::json> KeyValueStore::lookup(const std::string& key) {
    auto value = peek(key);
    (value ? hits_ : misses_).fetch_add(1);
    return value;
}

std::optional<nlohmann::json> MemoryStore::peek(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = data_.find(key);
    if (it == data_.end()) return std::nullopt;
    return it->second;
}

void MemoryStore::put(const std::string& key, const nlohmann::json& value) {
    std::lock_guard lock(mutex_);
    data_[key] = value;
}

std::size_t MemoryStore::entries() const {
    std::lock_guard lock(mutex_);
    return data_.size();
}

DiskStore::DiskStore(std::filesystem::path root, std::string name_space)
    : dir_(std::move(root) / std::move(name_space)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path DiskStore::path_for(const std::string& key) const {
    return dir_ / (sha256_hex(key) + ".json");
}

std::mutex& DiskStore::lock_for(const std::string& key) const {
    return stripes_[fnv1a64(key) % stripes_.size()];
}

std::optional<nlohmann::json> DiskStore::peek(const std::string& key) const {
    const auto path = path_for(key);
    std::lock_guard lock(lock_for(key));
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        auto record = nlohmann::json::parse(read_file(path));
        if (record.value("key", std::string()) != key) return std::nullopt;
        return record.at("value");
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

void DiskStore::put(const std::string& key, const nlohmann::json& value) {
    const nlohmann::json record{{"key", key}, {"value", value}};
    std::lock_guard lock(lock_for(key));
    write_file_atomic(path_for(key), dump_json(record, 2) + "\n");
}

std::size_t DiskStore::entries() const {
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") ++n;
    }
    return n;
}

}  // namespace hatedet
