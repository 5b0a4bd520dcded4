#pragma once

namespace medtree
{
inline constexpr const char* artifact_name = "medtree";
inline constexpr const char* artifact_version = "0.1.0";
}  // namespace medtree
