#pragma once

#include <string>

#include "json.hpp"

#include "asmsim/se3.hpp"

namespace asmsim {

using Json = nlohmann::json;  // std::map keys: serialized output is sorted

Json toJson(const Vec3& v);
Json toJson(const Mat3& r);  // 9 numbers, row-major
Json toJson(const Pose& pose);

Vec3 vec3FromJson(const Json& j, const std::string& context);
Mat3 mat3FromJson(const Json& j, const std::string& context);
Pose poseFromJson(const Json& j, const std::string& context);

/// Throws InvalidInput naming the key and context when absent.
const Json& requireKey(const Json& j, const std::string& key,
                       const std::string& context);

void writeJsonFile(const Json& j, const std::string& path);
Json readJsonFile(const std::string& path);

}  // namespace asmsim
