#include "asmsim/jsonio.hpp"

#include <fstream>

#include "asmsim/errors.hpp"

namespace asmsim {

Json toJson(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json toJson(const Mat3& r) {
  Json out = Json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.push_back(r(i, j));
  return out;
}

Json toJson(const Pose& pose) {
  return Json{{"t", toJson(pose.p)}, {"R", toJson(pose.R)}};
}

Vec3 vec3FromJson(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorKind::InvalidInput, context + ": expected 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Mat3 mat3FromJson(const Json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 9)
    throw Error(ErrorKind::InvalidInput,
                context + ": expected 9 numbers row-major");
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) r(i, k) = j[3 * i + k].get<double>();
  return r;
}

Pose poseFromJson(const Json& j, const std::string& context) {
  Pose pose;
  pose.p = vec3FromJson(requireKey(j, "t", context), context + ".t");
  pose.R = mat3FromJson(requireKey(j, "R", context), context + ".R");
  if (!isRotation(pose.R, 1e-6))
    throw Error(ErrorKind::InvalidInput, context + ": R is not a rotation");
  return pose;
}

const Json& requireKey(const Json& j, const std::string& key,
                       const std::string& context) {
  auto it = j.find(key);
  if (it == j.end())
    throw Error(ErrorKind::InvalidInput,
                context + ": missing required key '" + key + "'");
  return *it;
}

void writeJsonFile(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  out << j.dump(2) << "\n";
}

Json readJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

}  // namespace asmsim
