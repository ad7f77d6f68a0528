#include "poseac/core/hash.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <memory>

#include "poseac/core/check.hpp"

namespace poseac {

namespace {

std::string to_hex(const unsigned char* digest, unsigned len) {
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hexd[digest[i] >> 4]);
        out.push_back(hexd[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace

std::string sha256_hex(const void* data, size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned dlen = 0;
    POSEAC_CHECK(EVP_Digest(data, len, digest, &dlen, EVP_sha256(), nullptr) == 1,
                 "EVP_Digest failed");
    return to_hex(digest, dlen);
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

std::string sha256_hex(const std::vector<float>& v) {
    return sha256_hex(v.data(), v.size() * sizeof(float));
}

std::string sha256_tree(const std::filesystem::path& root) {
    POSEAC_CHECK(std::filesystem::is_directory(root),
                 "sha256_tree: not a directory: ", root.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::vector<std::string> lines;
    lines.reserve(files.size());
    for (const auto& f : files)
        lines.push_back(f.lexically_relative(root).generic_string() + "\t" +
                        sha256_file(f) + "\n");
    std::sort(lines.begin(), lines.end());
    std::string joined;
    for (const auto& l : lines) joined += l;
    return sha256_hex(joined);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
    POSEAC_CHECK(fp != nullptr, "cannot open for hashing: ", path.string());
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    POSEAC_CHECK(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, "digest init");
    std::array<unsigned char, 1 << 16> buf;
    size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), fp.get())) > 0)
        POSEAC_CHECK(EVP_DigestUpdate(ctx.get(), buf.data(), n) == 1, "digest update");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned dlen = 0;
    POSEAC_CHECK(EVP_DigestFinal_ex(ctx.get(), digest, &dlen) == 1, "digest final");
    return to_hex(digest, dlen);
}

}  // namespace poseac
