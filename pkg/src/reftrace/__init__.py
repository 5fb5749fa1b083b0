"""Line-level change tracing for iteratively refactored Java snippets."""

__version__ = "0.1.0"
