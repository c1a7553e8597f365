// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/params_io.hpp"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "revunet/tensor_io.hpp"

namespace revunet {

namespace std_fs = std::filesystem;

namespace {

std::string file_name(std::size_t i, const std::string& name) {
    std::ostringstream os;
    os << std::setw(4) << std::setfill('0') << i << '_';
    for (char c : name) os << (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ? c : '-');
    os << ".rvt";
    return os.str();
}

}  // namespace

template <typename T>
void save_params(const ParamStore<T>& p, const std_fs::path& dir, const std::optional<UNetConfig>& cfg) {
    std_fs::create_directories(dir);
    nlohmann::json m;
    m["schema_version"] = 1;
    m["precision"] = precision_name(precision_of<T>());
    if (cfg) m["config"] = to_json(*cfg);
    m["params"] = nlohmann::json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const std::string f = file_name(i, p.name(i));
        tensor_write(p[i], dir / f);
        const auto dims = p[i].shape().dims();
        m["params"].push_back({{"name", p.name(i)}, {"file", f}, {"shape", dims}});
    }
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + (dir / "manifest.json").string());
}

nlohmann::json read_manifest(const std_fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("missing manifest.json in " + dir.string());
    nlohmann::json m;
    try {
        in >> m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }
    return m;
}

template <typename T>
void load_params_into(ParamStore<T>& p, const std_fs::path& dir) {
    const nlohmann::json m = read_manifest(dir);
    const auto& list = m.at("params");
    if (list.size() != p.size()) {
        throw FormatError("manifest lists " + std::to_string(list.size()) + " parameters, model has " +
                          std::to_string(p.size()));
    }
    for (const auto& e : list) {
        const std::string name = e.at("name").get<std::string>();
        const std::size_t idx = p.index_of(name);
        Tensor5<T> t = tensor_read<T>(dir / e.at("file").get<std::string>());
        if (!(t.shape() == p[idx].shape())) {
            throw FormatError("shape mismatch for '" + name + "': file " + t.shape().str() + ", model " +
                              p[idx].shape().str());
        }
        p.mutable_value(idx) = std::move(t);
    }
}

template void save_params(const ParamStore<float>&, const std_fs::path&, const std::optional<UNetConfig>&);
template void save_params(const ParamStore<double>&, const std_fs::path&, const std::optional<UNetConfig>&);
template void load_params_into(ParamStore<float>&, const std_fs::path&);
template void load_params_into(ParamStore<double>&, const std_fs::path&);

}  // namespace revunet
