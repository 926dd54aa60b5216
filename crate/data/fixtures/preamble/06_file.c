int load_header(const char *path, struct hdr *out)
{
    FILE *fp = fopen(path, "rb");
    if (!fp)
        return -1;
    if (fread(out, sizeof(*out), 1, fp) != 1) {
        fclose(fp);
        return -1;
    }
    fclose(fp);
    return validate_hdr(out);
}
