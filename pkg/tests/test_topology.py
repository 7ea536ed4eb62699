import pytest

from binecoll.topology import (
    AllocationParseError,
    AllocationRecord,
    GroupMap,
    block_groups,
    coord_to_rank,
    explicit_groups,
    load_allocation,
    save_allocation,
    synthetic_block_records,
    torus_coords,
)


class TestGroupMap:
    def test_block_groups_pairs(self):
        gm = block_groups(8, 2)
        assert gm.group_of == (0, 0, 1, 1, 2, 2, 3, 3)
        assert gm.num_groups == 4

    def test_single_group_and_singletons(self):
        assert block_groups(16, 16).num_groups == 1
        assert block_groups(16, 1).group_of == tuple(range(16))

    def test_uneven_tail_group(self):
        assert block_groups(10, 4).group_of == (0, 0, 0, 0, 1, 1, 1, 1, 2, 2)

    def test_dense_ids_enforced(self):
        with pytest.raises(ValueError):
            GroupMap(4, (0, 2, 2, 3), "explicit")
        with pytest.raises(ValueError):
            GroupMap(4, (0, 0, 1), "explicit")

    def test_explicit_groups_renumbers(self):
        gm = explicit_groups([7, 7, 3, 3, 7])
        assert gm.group_of == (0, 0, 1, 1, 0)


class TestAllocationFiles:
    def write(self, tmp_path, text):
        path = tmp_path / "alloc.csv"
        path.write_text(text)
        return path

    def test_two_line_job(self, tmp_path):
        path = self.write(tmp_path, "job,node,group\nj1,n1,0\nj1,n2,0\n")
        (record,) = load_allocation(path)
        assert record.num_nodes == 2
        assert record.group_map().group_of == (0, 0)

    def test_blockwise_job_matches_block_groups(self, tmp_path):
        rows = "".join(f"j9,n{i},{i // 2}\n" for i in range(8))
        path = self.write(tmp_path, "job,node,group\n" + rows)
        (record,) = load_allocation(path)
        assert record.group_map().group_of == block_groups(8, 2).group_of

    def test_duplicate_row_is_parse_error(self, tmp_path):
        path = self.write(tmp_path, "job,node,group\nj1,n1,0\nj1,n1,1\n")
        with pytest.raises(AllocationParseError, match="line 3"):
            load_allocation(path)

    def test_malformed_row_names_line(self, tmp_path):
        path = self.write(tmp_path, "job,node,group\nj1,n1,0\nj1,n2\n")
        with pytest.raises(AllocationParseError, match="line 3"):
            load_allocation(path)

    def test_non_integer_group(self, tmp_path):
        path = self.write(tmp_path, "job,node,group\nj1,n1,zero\n")
        with pytest.raises(AllocationParseError, match="not an integer"):
            load_allocation(path)

    def test_missing_header(self, tmp_path):
        path = self.write(tmp_path, "j1,n1,0\n")
        with pytest.raises(AllocationParseError, match="header"):
            load_allocation(path)

    def test_tiny_job_skipped_with_warning(self, tmp_path):
        path = self.write(
            tmp_path, "job,node,group\nsolo,n1,0\nj2,n1,0\nj2,n2,1\n"
        )
        with pytest.warns(UserWarning, match="solo"):
            records = load_allocation(path)
        assert [r.job for r in records] == ["j2"]

    def test_save_load_round_trip(self, tmp_path):
        records = synthetic_block_records([8, 16], 2, (2, 4), seed=3)
        path = tmp_path / "trace.csv"
        save_allocation(records, path)
        assert load_allocation(path) == records

    def test_group_map_truncation(self):
        record = AllocationRecord("j", tuple("abcdef"), (5, 5, 9, 9, 2, 2))
        assert record.group_map(4).group_of == (0, 0, 1, 1)
        with pytest.raises(ValueError):
            record.group_map(8)


class TestTorus:
    def test_row_major_example(self):
        coords = torus_coords(8, [2, 2, 2])
        assert coords[5] == (1, 0, 1)
        assert coords[0] == (0, 0, 0)

    def test_round_trip(self):
        dims = [2, 4, 2]
        coords = torus_coords(16, dims)
        assert [coord_to_rank(c, dims) for c in coords] == list(range(16))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            torus_coords(8, [2, 2])
