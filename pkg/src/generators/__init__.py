from .region_renderer import RegionGrid, default_bbox, rasterize, read_csv, write_csv, write_image
