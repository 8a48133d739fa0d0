#include "vid2scenic/util/fs.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace fs = std::filesystem;

namespace vid2scenic::util {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("failed reading {}", path.string()));
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    std::string tmpl = (dir / ("." + path.filename().string() + ".XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    int fd = ::mkstemp(buf.data());
    if (fd < 0) {
        throw IoError(fmt::format("cannot create temporary file next to {}: {}", path.string(),
                                  std::strerror(errno)));
    }
    std::size_t off = 0;
    while (off < content.size()) {
        ssize_t w = ::write(fd, content.data() + off, content.size() - off);
        if (w < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            ::close(fd);
            ::unlink(buf.data());
            throw IoError(fmt::format("write to {} failed: {}", path.string(), std::strerror(err)));
        }
        off += static_cast<std::size_t>(w);
    }
    ::fsync(fd);
    ::fchmod(fd, 0644);
    ::close(fd);
    if (::rename(buf.data(), path.c_str()) != 0) {
        int err = errno;
        ::unlink(buf.data());
        throw IoError(fmt::format("cannot rename into {}: {}", path.string(), std::strerror(err)));
    }
}

fs::path make_temp_dir(const fs::path& parent, std::string_view prefix) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    std::string tmpl = (parent / (std::string(prefix) + "XXXXXX")).string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!::mkdtemp(buf.data())) {
        throw IoError(fmt::format("cannot create directory under {}: {}", parent.string(),
                                  std::strerror(errno)));
    }
    return fs::path(buf.data());
}

void publish_dir(const fs::path& staged, const fs::path& target) {
    std::error_code ec;
    if (fs::exists(target, ec)) fs::remove_all(target, ec);
    fs::rename(staged, target, ec);
    if (ec) throw IoError(fmt::format("cannot move {} to {}: {}", staged.string(), target.string(), ec.message()));
}

}  // namespace vid2scenic::util
