#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgen/demo/kmeans.hpp"

namespace cfgen {

// Rows x 2 projection onto the two leading principal components. Component
// signs are fixed so the largest-magnitude loading is positive.
std::vector<std::array<double, 2>> pca_2d(std::span<const std::vector<double>> points);

// Sizes, inertia trace, reseeds.
nlohmann::json clustering_summary(const Clustering& clustering);

// Writes clustering.json and clustering_pca.csv (id,cluster,pc1,pc2) into dir.
std::vector<std::filesystem::path> write_clustering_report(
    const std::filesystem::path& dir, const Clustering& clustering,
    std::span<const std::vector<double>> points);

}  // namespace cfgen
