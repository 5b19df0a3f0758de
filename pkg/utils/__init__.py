"""Support code outside the domain package: logging, frame rendering, scenario recording."""
