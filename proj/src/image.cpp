#include "wsosvm/image.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wsosvm::image {

namespace fs = std::filesystem;

int ContrastStack::channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name) return static_cast<int>(i);
    return -1;
}

int ContrastStack::truth_index(const std::string& gene) const {
    for (std::size_t i = 0; i < truth_genes.size(); ++i)
        if (truth_genes[i] == gene) return static_cast<int>(i);
    return -1;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "WSOPLANE I/O assumes a little-endian host");

void write_exact(std::ofstream& out, const void* data, std::size_t len,
                 const fs::path& path) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

void write_plane(const Plane& plane, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    std::string header = "WSOPLANE 1 " + std::to_string(plane.width()) + " " +
                         std::to_string(plane.height()) + "\n";
    write_exact(out, header.data(), header.size(), path);
    write_exact(out, plane.data().data(), plane.data().size() * sizeof(float), path);
}

Plane read_plane(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw DataError("truncated plane file: " + path.string());
    std::istringstream hs(header);
    std::string magic;
    int version = 0, width = 0, height = 0;
    hs >> magic >> version >> width >> height;
    if (magic != "WSOPLANE") throw DataError("not a WSOPLANE file: " + path.string());
    if (version != 1)
        throw DataError("unsupported WSOPLANE version " + std::to_string(version) +
                        ": " + path.string());
    if (width <= 0 || height <= 0)
        throw DataError("bad plane dimensions in " + path.string());
    Plane plane(width, height);
    in.read(reinterpret_cast<char*>(plane.data().data()),
            static_cast<std::streamsize>(plane.data().size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(plane.data().size() * sizeof(float)))
        throw DataError("truncated plane payload: " + path.string());
    return plane;
}

void write_stack(const ContrastStack& stack, const fs::path& manifest_path) {
    fs::path dir = manifest_path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);

    auto plane_file = [](const std::string& kind, const std::string& name) {
        std::string file = kind + "_";
        for (char c : name)
            file += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
        return file + ".plane";
    };

    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot open for writing: " + manifest_path.string());
    out << "WSOSTACK 1\n";
    out << "width " << stack.width << "\n";
    out << "height " << stack.height << "\n";
    for (std::size_t i = 0; i < stack.channels.size(); ++i) {
        std::string file = plane_file("channel", stack.channel_names[i]);
        out << "channel " << stack.channel_names[i] << " " << file << "\n";
        write_plane(stack.channels[i], dir / file);
    }
    const std::pair<const char*, const Plane*> masks[] = {
        {"CE", &stack.mask_ce},
        {"NE", &stack.mask_ne},
        {"necrosis", &stack.mask_necrosis},
        {"contralateral", &stack.mask_contralateral},
    };
    for (auto& [name, plane] : masks) {
        std::string file = plane_file("mask", name);
        out << "mask " << name << " " << file << "\n";
        write_plane(*plane, dir / file);
    }
    for (std::size_t i = 0; i < stack.truth.size(); ++i) {
        std::string file = plane_file("truth", stack.truth_genes[i]);
        out << "truth " << stack.truth_genes[i] << " " << file << "\n";
        write_plane(stack.truth[i], dir / file);
    }
    if (!out) throw DataError("write failed: " + manifest_path.string());
}

ContrastStack read_stack(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open: " + manifest_path.string());
    fs::path dir = manifest_path.parent_path();

    std::string line;
    if (!std::getline(in, line) || line != "WSOSTACK 1")
        throw DataError("not a WSOSTACK v1 manifest: " + manifest_path.string());

    ContrastStack stack;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "width") {
            ls >> stack.width;
        } else if (key == "height") {
            ls >> stack.height;
        } else if (key == "channel" || key == "mask" || key == "truth") {
            std::string name, file;
            ls >> name >> file;
            if (name.empty() || file.empty())
                throw DataError(manifest_path.string() + ":" + std::to_string(line_no) +
                                ": malformed " + key + " entry");
            Plane plane = read_plane(dir / file);
            if (plane.width() != stack.width || plane.height() != stack.height)
                throw DataError(manifest_path.string() + ":" + std::to_string(line_no) +
                                ": plane shape mismatch for " + name);
            if (key == "channel") {
                stack.channel_names.push_back(name);
                stack.channels.push_back(std::move(plane));
            } else if (key == "truth") {
                stack.truth_genes.push_back(name);
                stack.truth.push_back(std::move(plane));
            } else if (name == "CE") {
                stack.mask_ce = std::move(plane);
            } else if (name == "NE") {
                stack.mask_ne = std::move(plane);
            } else if (name == "necrosis") {
                stack.mask_necrosis = std::move(plane);
            } else if (name == "contralateral") {
                stack.mask_contralateral = std::move(plane);
            } else {
                throw DataError(manifest_path.string() + ":" + std::to_string(line_no) +
                                ": unknown mask '" + name + "'");
            }
        } else {
            throw DataError(manifest_path.string() + ":" + std::to_string(line_no) +
                            ": unknown manifest key '" + key + "'");
        }
    }
    if (stack.channels.empty())
        throw DataError("manifest lists no channels: " + manifest_path.string());
    if (stack.mask_ce.empty() || stack.mask_ne.empty() || stack.mask_necrosis.empty() ||
        stack.mask_contralateral.empty())
        throw DataError("manifest is missing one of the CE/NE/necrosis/contralateral masks: " +
                        manifest_path.string());
    return stack;
}

}  // namespace wsosvm::image
