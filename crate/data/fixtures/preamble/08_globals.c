void stats_record(int bucket, u_int32_t value)
{
    if (bucket < 0 || bucket >= MAX_BUCKETS)
        return;
    histogram[bucket] += value;
    total_samples++;
    if (verbose)
        printf("bucket %d -> %u\n", bucket, value);
}
