#pragma once

#include "specshape/geometry.hpp"

#include <filesystem>
#include <string>

namespace testing {

inline specshape::Mesh disk(int n_rings)
{
    specshape::DomainSpec d;
    d.n_rings = n_rings;
    return specshape::build_mesh(d);
}

inline specshape::Mesh ellipse(double a, double b, int n_rings)
{
    specshape::DomainSpec d;
    d.shape = specshape::Ellipse{a, b};
    d.n_rings = n_rings;
    return specshape::build_mesh(d);
}

// U-shaped union of unit cells (3 x 3 block without the center and the
// middle-right cell), each cell split into sub x sub squares. Its centroid
// lies in the notch, so it is not star-shaped about it.
inline specshape::Mesh u_shape(int sub)
{
    const int n = 3 * sub;
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    std::vector<specshape::Point> nodes;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            nodes.emplace_back(static_cast<double>(i) / sub, static_cast<double>(j) / sub);
    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int ci = i / sub;
            const int cj = j / sub;
            if (cj == 1 && ci >= 1)
                continue;
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    // Drop unused nodes.
    std::vector<int> remap(nodes.size(), -1);
    std::vector<specshape::Point> used;
    for (auto& t : tris)
        for (int& v : t) {
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(used.size());
                used.push_back(nodes[v]);
            }
            v = remap[v];
        }
    return specshape::make_mesh(std::move(used), std::move(tris));
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("specshape_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
