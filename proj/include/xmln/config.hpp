#pragma once

#include <map>
#include <optional>
#include <string>

namespace xmln {

// key=value config file with `#` comments. Keys are dotted
// (model.variant, sampler.p_obs, ...). CLI flags override file values.
class ConfigMap {
  public:
    static ConfigMap from_file(const std::string& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

} // namespace xmln
